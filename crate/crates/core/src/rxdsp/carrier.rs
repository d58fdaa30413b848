use crate::error::{Error, Result};
use crate::txsim::SymbolFrame;
use crate::waveform::ComplexSignal;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Data-aided carrier recovery on a synchronized 2-samples-per-symbol signal.
///
/// Each block of `block_len` symbols yields `arg sum(rx[2k] * conj(ref[k]))`.
/// Block phases are unwrapped, interpolated linearly between block centers
/// (held constant beyond the first and last centers) and removed.
pub fn carrier_recover(
    rx: &ComplexSignal,
    frame: &SymbolFrame,
    block_len: usize,
) -> Result<ComplexSignal> {
    let k_sym = frame.len();
    if block_len == 0 {
        return Err(Error::InvalidParameter(
            "block length must be positive".into(),
        ));
    }
    if rx.len() < 2 * k_sym {
        return Err(Error::LengthMismatch {
            left: rx.len(),
            right: 2 * k_sym,
        });
    }
    let x = rx.samples();
    let mut centers = Vec::new();
    let mut phases: Vec<f64> = Vec::new();
    let mut start = 0;
    while start < k_sym {
        let end = (start + block_len).min(k_sym);
        let acc: Complex64 = (start..end)
            .map(|k| x[2 * k] * frame.symbols[k].conj())
            .sum();
        let raw = acc.arg();
        let phase = match phases.last() {
            Some(&prev) => {
                let d = raw - prev;
                prev + d - 2.0 * PI * (d / (2.0 * PI)).round()
            }
            None => raw,
        };
        centers.push(0.5 * (start + end - 1) as f64);
        phases.push(phase);
        start = end;
    }

    let phase_at = |t: f64| -> f64 {
        if t <= centers[0] {
            return phases[0];
        }
        let last = centers.len() - 1;
        if t >= centers[last] {
            return phases[last];
        }
        let b = centers.partition_point(|&c| c <= t) - 1;
        let w = (t - centers[b]) / (centers[b + 1] - centers[b]);
        phases[b] + w * (phases[b + 1] - phases[b])
    };

    let out = x
        .iter()
        .enumerate()
        .map(|(i, &v)| v * Complex64::from_polar(1.0, -phase_at(0.5 * i as f64)))
        .collect();
    Ok(ComplexSignal::from_trusted(out, rx.sample_rate_hz()))
}
