//! Ideal coherent-detection reference path.
//!
//! A lossless 90° hybrid with a local oscillator slightly off the carrier.
//! The receiver DSP downstream is the same one used after field
//! reconstruction.

use crate::error::{Error, Result};
use crate::fieldrec::{estimate_foe, Method};
use crate::rxdsp::{receive, RxConfig, RxOutcome};
use crate::txsim::SymbolFrame;
use crate::waveform::{brickwall_lowpass, frequency_shift, ComplexSignal};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `E * exp(-j 2 pi lo_offset t)` plus optional AWGN.
///
/// `snr_db` is Es/N0: with `P` the field power and `fs / baud` samples per
/// symbol, the complex noise variance per sample is `P * (fs / baud) / snr`.
pub fn coherent_receive(
    field: &ComplexSignal,
    lo_offset_hz: f64,
    baud_hz: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<ComplexSignal> {
    if lo_offset_hz.abs() > baud_hz / 8.0 {
        return Err(Error::InvalidParameter(format!(
            "LO offset {lo_offset_hz} Hz exceeds baud/8"
        )));
    }
    let mixed = if lo_offset_hz == 0.0 {
        field.clone()
    } else {
        frequency_shift(field, lo_offset_hz)
    };
    let Some(snr_db) = snr_db else {
        return Ok(mixed);
    };
    let sps = field.sample_rate_hz() / baud_hz;
    let var = mixed.power() * sps / 10f64.powf(snr_db / 10.0);
    let g =
        Normal::new(0.0, (0.5 * var).sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = mixed
        .samples()
        .iter()
        .map(|v| v + Complex64::new(g.sample(&mut rng), g.sample(&mut rng)))
        .collect();
    ComplexSignal::new(noisy, field.sample_rate_hz())
}

/// Coherent front end followed by FOE, anti-alias filter and the receiver.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_coherent(
    field: &ComplexSignal,
    frame: &SymbolFrame,
    rx: &RxConfig,
    baud_hz: f64,
    rolloff: f64,
    lo_offset_hz: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<RxOutcome> {
    let received = coherent_receive(field, lo_offset_hz, baud_hz, snr_db, seed)?;
    let foe = estimate_foe(&received, 0.0, baud_hz)?;
    let shifted = frequency_shift(&received, foe);
    let cutoff = 0.5 * (1.0 + rolloff) * baud_hz + 0.01 * baud_hz;
    let filtered = if cutoff < 0.5 * shifted.sample_rate_hz() {
        brickwall_lowpass(&shifted, cutoff)?
    } else {
        shifted
    };
    receive(
        &filtered.normalized(),
        frame,
        rx,
        baud_hz,
        rolloff,
        Method::Cohd,
        foe,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txsim::{transmit, TxConfig};

    #[test]
    fn zero_offset_noiseless_is_identity() {
        let tx = TxConfig {
            n_symbols: 4096,
            ..TxConfig::default()
        };
        let (_, e) = transmit(&tx).unwrap();
        let out = coherent_receive(&e, 0.0, tx.baud_hz, None, 1).unwrap();
        assert_eq!(out.samples(), e.samples());
    }

    #[test]
    fn noise_follows_es_n0() {
        let tx = TxConfig {
            n_symbols: 8192,
            ..TxConfig::default()
        };
        let (_, e) = transmit(&tx).unwrap();
        let out = coherent_receive(&e, 0.0, tx.baud_hz, Some(20.0), 3).unwrap();
        let noise: f64 = out
            .samples()
            .iter()
            .zip(e.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / e.len() as f64;
        let expected = e.power() * 8.0 / 100.0;
        assert!((noise / expected - 1.0).abs() < 0.02);
        assert!(coherent_receive(&e, 5e9, tx.baud_hz, None, 1).is_err());
    }
}
