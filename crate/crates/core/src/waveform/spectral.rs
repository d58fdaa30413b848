use super::fft::{fft_forward, fft_inverse, real_spectrum, signed_bin, spectrum_of};
use super::{ComplexSignal, RealSignal};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One-sided analytic signal of a real record: DC (and Nyquist for even
/// lengths) kept at unit gain, strictly positive bins doubled, negative bins
/// zeroed.
pub(crate) fn analytic_samples(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut spec = real_spectrum(x);
    let half = n / 2;
    for (k, v) in spec.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *v *= gain;
    }
    fft_inverse(&mut spec);
    // Real part is x by construction; restore it exactly.
    for (v, &xr) in spec.iter_mut().zip(x) {
        v.re = xr;
    }
    spec
}

/// Analytic signal by frequency-domain Hilbert transform.
pub fn hilbert_analytic(x: &RealSignal) -> Result<ComplexSignal> {
    if x.len() < 4 {
        return Err(Error::InvalidSignal(format!(
            "Hilbert transform needs at least 4 samples, got {}",
            x.len()
        )));
    }
    Ok(ComplexSignal::from_trusted(
        analytic_samples(x.samples()),
        x.sample_rate_hz(),
    ))
}

fn check_delay(tau_s: f64, duration_s: f64) -> Result<()> {
    if !tau_s.is_finite() || tau_s.abs() >= 0.25 * duration_s {
        return Err(Error::InvalidParameter(format!(
            "delay {tau_s:e} s must satisfy |tau| < 0.25 x record duration ({duration_s:e} s)"
        )));
    }
    Ok(())
}

/// Delay by a (possibly fractional) number of seconds, applied as the linear
/// phase `exp(-j 2 pi f tau)` on the circular spectrum.
pub trait FractionalDelay: Sized {
    fn fractional_delay(&self, tau_s: f64) -> Result<Self>;
}

impl FractionalDelay for ComplexSignal {
    fn fractional_delay(&self, tau_s: f64) -> Result<Self> {
        check_delay(tau_s, self.duration_s())?;
        let n = self.len();
        let fs = self.sample_rate_hz();
        let mut spec = spectrum_of(self.samples());
        for (k, v) in spec.iter_mut().enumerate() {
            let f = signed_bin(k, n) as f64 * fs / n as f64;
            *v *= Complex64::from_polar(1.0, -2.0 * PI * f * tau_s);
        }
        fft_inverse(&mut spec);
        Ok(ComplexSignal::from_trusted(spec, fs))
    }
}

impl FractionalDelay for RealSignal {
    fn fractional_delay(&self, tau_s: f64) -> Result<Self> {
        check_delay(tau_s, self.duration_s())?;
        let n = self.len();
        let fs = self.sample_rate_hz();
        let mut spec = real_spectrum(self.samples());
        for (k, v) in spec.iter_mut().enumerate() {
            if n.is_multiple_of(2) && k == n / 2 {
                // A lone Nyquist bin must stay real to keep the output real.
                *v *= (PI * fs * tau_s).cos();
            } else {
                let f = signed_bin(k, n) as f64 * fs / n as f64;
                *v *= Complex64::from_polar(1.0, -2.0 * PI * f * tau_s);
            }
        }
        fft_inverse(&mut spec);
        Ok(RealSignal::from_trusted(
            spec.into_iter().map(|v| v.re).collect(),
            fs,
        ))
    }
}

pub fn fractional_delay<S: FractionalDelay>(x: &S, tau_s: f64) -> Result<S> {
    x.fractional_delay(tau_s)
}

/// Maps a length-`n` spectrum onto `m` bins by zero-padding or truncation,
/// splitting or merging the Nyquist bin of the shorter length.
fn respectrum(spec: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = spec.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let short = n.min(m);
    let keep = (short - 1) / 2;
    out[0] = spec[0];
    for k in 1..=keep {
        out[k] = spec[k];
        out[m - k] = spec[n - k];
    }
    if short.is_multiple_of(2) && short < n.max(m) {
        let h = short / 2;
        if n < m {
            let half = spec[h] * 0.5;
            out[h] = half;
            out[m - h] = half;
        } else {
            out[h] = spec[h] + spec[n - h];
        }
    } else if n == m && n.is_multiple_of(2) {
        out[n / 2] = spec[n / 2];
    }
    let scale = m as f64 / n as f64;
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

fn resampled_len(n: usize, old_rate: f64, new_rate: f64) -> Result<usize> {
    if !(new_rate.is_finite() && new_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target sample rate must be positive, got {new_rate}"
        )));
    }
    let m = (n as f64 * new_rate / old_rate).round() as usize;
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "resampling {n} samples to {new_rate:e} Hz leaves fewer than 2 samples"
        )));
    }
    Ok(m)
}

/// FFT-domain resampling.
///
/// The output length is `round(N * new / old)`, and the reported output rate is
/// the one that length actually realizes (`old * M / N`), so the record keeps
/// its exact duration. The two rates coincide whenever `N * new / old` is an
/// integer. Band-limiting below the smaller Nyquist frequency is the caller's
/// responsibility; content above it is silently dropped.
pub fn resample(x: &ComplexSignal, new_rate_hz: f64) -> Result<ComplexSignal> {
    let n = x.len();
    let m = resampled_len(n, x.sample_rate_hz(), new_rate_hz)?;
    if m == n {
        return Ok(x.clone());
    }
    let mut out = respectrum(&spectrum_of(x.samples()), m);
    fft_inverse(&mut out);
    let rate = x.sample_rate_hz() * m as f64 / n as f64;
    Ok(ComplexSignal::from_trusted(out, rate))
}

/// [`resample`] for real records; the output stays real.
pub fn resample_real(x: &RealSignal, new_rate_hz: f64) -> Result<RealSignal> {
    let n = x.len();
    let m = resampled_len(n, x.sample_rate_hz(), new_rate_hz)?;
    if m == n {
        return Ok(x.clone());
    }
    let mut out = respectrum(&real_spectrum(x.samples()), m);
    fft_inverse(&mut out);
    let rate = x.sample_rate_hz() * m as f64 / n as f64;
    Ok(RealSignal::from_trusted(
        out.into_iter().map(|v| v.re).collect(),
        rate,
    ))
}

/// Multiplies by `exp(-j 2 pi f t)`, moving spectral content at `f_hz` to DC.
pub fn frequency_shift(x: &ComplexSignal, f_hz: f64) -> ComplexSignal {
    let cycles_per_sample = f_hz / x.sample_rate_hz();
    let samples = x
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cycles = (cycles_per_sample * i as f64).rem_euclid(1.0);
            v * Complex64::from_polar(1.0, -2.0 * PI * cycles)
        })
        .collect();
    ComplexSignal::from_trusted(samples, x.sample_rate_hz())
}

/// Ideal low-pass: zeroes every bin with |f| > cutoff.
pub fn brickwall_lowpass(x: &ComplexSignal, cutoff_hz: f64) -> Result<ComplexSignal> {
    let fs = x.sample_rate_hz();
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff_hz:e} Hz must lie in (0, {:e}) Hz",
            fs / 2.0
        )));
    }
    let n = x.len();
    let mut spec = spectrum_of(x.samples());
    for (k, v) in spec.iter_mut().enumerate() {
        let f = signed_bin(k, n) as f64 * fs / n as f64;
        if f.abs() > cutoff_hz {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_inverse(&mut spec);
    Ok(ComplexSignal::from_trusted(spec, fs))
}

/// Length-`n` DFT of an FIR whose middle tap (index `(len-1)/2`) sits at time zero.
pub(crate) fn centered_fir_response(taps: &[f64], n: usize) -> Vec<Complex64> {
    let center = (taps.len() - 1) / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, &t) in taps.iter().enumerate() {
        let idx = (j as i64 - center as i64).rem_euclid(n as i64) as usize;
        buf[idx] += t;
    }
    fft_forward(&mut buf);
    buf
}

/// Circular convolution with a real FIR referenced to its middle tap, so a
/// symmetric filter introduces no delay.
pub fn apply_fir_centered(x: &ComplexSignal, taps: &[f64]) -> Result<ComplexSignal> {
    if taps.is_empty() || taps.len() > x.len() {
        return Err(Error::InvalidParameter(format!(
            "FIR of {} taps does not fit a record of {} samples",
            taps.len(),
            x.len()
        )));
    }
    let h = centered_fir_response(taps, x.len());
    let mut spec = spectrum_of(x.samples());
    for (v, hv) in spec.iter_mut().zip(&h) {
        *v *= hv;
    }
    fft_inverse(&mut spec);
    Ok(ComplexSignal::from_trusted(spec, x.sample_rate_hz()))
}
