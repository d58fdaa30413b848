use crate::error::{Error, Result};
use crate::txsim::SymbolFrame;
use crate::waveform::{fft_forward, fft_inverse, ComplexSignal};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Correlation peak over the strongest lag outside the main lobe.
pub const SYNC_MIN_PSR: f64 = 3.0;
/// Lags within this many samples of the peak belong to the main lobe.
const MAIN_LOBE: i64 = 2;

#[derive(Debug, Clone)]
pub struct SyncResult {
    /// Receive signal rotated so that sample `2k` is nearest symbol `k`, and
    /// de-rotated by `j^-rotation`. Trimmed to two samples per frame symbol.
    pub aligned: ComplexSignal,
    /// Frame delay in whole symbols (floor of `lag_samples / 2`).
    pub lag: i64,
    pub lag_samples: i64,
    /// Quarter-turn ambiguity `k` in `j^k` resolved against the known frame.
    pub rotation: u8,
    pub psr: f64,
}

/// Aligns a 2-samples-per-symbol capture to the known frame by circular
/// cross-correlation with the symbol train. The phase of the correlation peak
/// picks the constellation rotation `j^k`; residual fractional timing and
/// phase are left to the later stages.
pub fn synchronize(rx: &ComplexSignal, frame: &SymbolFrame) -> Result<SyncResult> {
    let k_sym = frame.len();
    let n = rx.len();
    if n < 2 * k_sym {
        return Err(Error::InvalidParameter(format!(
            "capture of {n} samples is shorter than the {}-sample frame",
            2 * k_sym
        )));
    }
    let mut reference = vec![Complex64::new(0.0, 0.0); n];
    for (k, &s) in frame.symbols.iter().enumerate() {
        reference[2 * k] = s;
    }
    fft_forward(&mut reference);
    let mut xc = rx.samples().to_vec();
    fft_forward(&mut xc);
    for (a, r) in xc.iter_mut().zip(&reference) {
        *a *= r.conj();
    }
    fft_inverse(&mut xc);

    let (peak_idx, peak) =
        xc.iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, v| if v.1 > acc.1 { v } else { acc },
            );
    let circ = |i: usize| -> i64 {
        let d = (i as i64 - peak_idx as i64).rem_euclid(n as i64);
        d.min(n as i64 - d)
    };
    let sidelobe = xc
        .iter()
        .enumerate()
        .filter(|(i, _)| circ(*i) > MAIN_LOBE)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    let psr = if sidelobe > 0.0 {
        peak / sidelobe
    } else if peak > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if !(psr >= SYNC_MIN_PSR) {
        return Err(Error::SyncFailed { psr });
    }

    let quarter = (xc[peak_idx].arg() / FRAC_PI_2).round() as i64;
    let rotation = quarter.rem_euclid(4) as u8;
    let derotate = Complex64::new(0.0, -1.0).powu(rotation as u32);
    let aligned: Vec<Complex64> = (0..2 * k_sym)
        .map(|i| rx.samples()[(i + peak_idx) % n] * derotate)
        .collect();
    let lag_samples = if peak_idx > n / 2 {
        peak_idx as i64 - n as i64
    } else {
        peak_idx as i64
    };
    Ok(SyncResult {
        aligned: ComplexSignal::from_trusted(aligned, rx.sample_rate_hz()),
        lag: lag_samples.div_euclid(2),
        lag_samples,
        rotation,
        psr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txsim::{generate_symbols, TxConfig};

    fn frame() -> SymbolFrame {
        generate_symbols(&TxConfig {
            n_symbols: 4096,
            ..TxConfig::default()
        })
        .unwrap()
    }

    fn impulse_train(f: &SymbolFrame, delay_sym: usize, rot: Complex64) -> ComplexSignal {
        let n = 2 * f.len();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, &s) in f.symbols.iter().enumerate() {
            x[(2 * (k + delay_sym)) % n] = s * rot;
        }
        ComplexSignal::new(x, 68e9).unwrap()
    }

    #[test]
    fn self_sync() {
        let f = frame();
        let r = synchronize(&impulse_train(&f, 0, Complex64::new(1.0, 0.0)), &f).unwrap();
        assert_eq!((r.lag, r.rotation), (0, 0));
    }

    #[test]
    fn delayed_and_rotated() {
        let f = frame();
        let r = synchronize(&impulse_train(&f, 17, Complex64::new(0.0, 1.0)), &f).unwrap();
        assert_eq!(r.lag, 17);
        assert_eq!(r.lag_samples, 34);
        assert_eq!(r.rotation, 1);
        for k in 0..f.len() {
            assert!((r.aligned.samples()[2 * k] - f.symbols[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn wrong_frame_fails() {
        let f = frame();
        let other = generate_symbols(&TxConfig {
            n_symbols: 4096,
            prbs_seed: 99,
            ..TxConfig::default()
        })
        .unwrap();
        let x = impulse_train(&other, 5, Complex64::new(1.0, 0.0));
        assert!(matches!(synchronize(&x, &f), Err(Error::SyncFailed { .. })));
    }
}
