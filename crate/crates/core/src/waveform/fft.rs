use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT, no scaling.
pub fn fft_forward(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place inverse DFT, scaled by 1/N so that it inverts [`fft_forward`].
pub fn fft_inverse(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed bin index of DFT bin `k` in a length-`n` transform.
///
/// Follows the usual convention: `[0, 1, .., ceil(n/2)-1, -floor(n/2), .., -1]`,
/// so for even `n` the Nyquist bin is reported as negative.
pub fn signed_bin(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub(crate) fn spectrum_of(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    fft_forward(&mut buf);
    buf
}

pub(crate) fn real_spectrum(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    buf
}
