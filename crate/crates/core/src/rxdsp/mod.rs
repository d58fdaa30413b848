//! Data-aided receiver: matched filtering to 2 samples per symbol, frame
//! synchronization, block carrier recovery, least-squares equalization, skew
//! readout and EVM/BER metrics.
//!
//! A 2x2 real (widely-linear) equalizer is fitted to read the skew: it is the
//! smallest structure able to delay I and Q independently. A strictly-linear
//! complex equalizer fitted on the same data cannot undo skew, and its EVM/BER
//! is what a skew-blind receiver would see.

mod carrier;
mod equalizer;
mod metrics;
mod sync;

pub use carrier::carrier_recover;
pub use equalizer::{
    linear_equalize, wiener_equalize, EqualizerSolution, LinearEqualizer, NoiseLoadedFit,
    RIDGE_RELATIVE,
};
pub use metrics::{ber, ber_semi_analytic, evm, gray_ber_closed_form};
pub use sync::{synchronize, SyncResult, SYNC_MIN_PSR};

use crate::error::{Error, Result};
use crate::fieldrec::Method;
use crate::txsim::SymbolFrame;
use crate::waveform::{apply_fir_centered, group_delay, resample, rrc_taps, ComplexSignal};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Samples per symbol at which the matched filter runs.
pub const MATCHED_FILTER_SPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RxConfig {
    /// Taps per equalizer branch (odd), at 2 samples per symbol.
    pub n_taps: usize,
    /// Fit band for the tap group delay, as a fraction of the tap-rate Nyquist
    /// frequency.
    pub band_fraction: f64,
    /// Carrier-recovery block length in symbols.
    pub cr_block_len: usize,
    pub rrc_span_symbols: usize,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            n_taps: 65,
            band_fraction: 0.4,
            cr_block_len: 256,
            rrc_span_symbols: 32,
        }
    }
}

impl RxConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_taps < 5 || self.n_taps.is_multiple_of(2) {
            v.push(format!(
                "n_taps must be odd and at least 5, got {}",
                self.n_taps
            ));
        }
        if !(self.band_fraction > 0.0 && self.band_fraction <= 0.5) {
            v.push(format!(
                "band_fraction must be in (0, 0.5], got {}",
                self.band_fraction
            ));
        }
        if self.cr_block_len == 0 {
            v.push("cr_block_len must be positive".into());
        }
        if self.rrc_span_symbols < 8 {
            v.push(format!(
                "rrc_span_symbols must be at least 8, got {}",
                self.rrc_span_symbols
            ));
        }
        v
    }
}

/// Estimated transmitter skew with the diagnostics of the fit it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewEstimate {
    /// Positive when Q lags I at the transmitter.
    pub skew_s: f64,
    pub method: Method,
    /// EVM after the widely-linear equalizer.
    pub evm_pct: f64,
    pub foe_hz: f64,
    pub residual_error: f64,
}

/// Transmitter skew read from the equalizer taps.
///
/// The equalizer inverts the channel, so a transmitter that delays Q yields
/// `taps_qq` that advance Q, and `gd(ii) - gd(qq)` is the transmitter value.
pub fn estimate_skew(sol: &EqualizerSolution, band_fraction: f64) -> Result<f64> {
    let ii = group_delay(&sol.taps_ii, sol.tap_rate_hz, band_fraction)?;
    let qq = group_delay(&sol.taps_qq, sol.tap_rate_hz, band_fraction)?;
    Ok(ii - qq)
}

/// RRC matched filter followed by decimation to 2 samples per symbol.
pub fn matched_filter_2sps(
    x: &ComplexSignal,
    baud_hz: f64,
    rolloff: f64,
    span_symbols: usize,
) -> Result<ComplexSignal> {
    let mf_rate = MATCHED_FILTER_SPS as f64 * baud_hz;
    let at_mf_rate = if (x.sample_rate_hz() / mf_rate - 1.0).abs() < 1e-9 {
        x.clone()
    } else {
        resample(x, mf_rate)?
    };
    let taps = rrc_taps(rolloff, span_symbols, MATCHED_FILTER_SPS)?;
    let filtered = apply_fir_centered(&at_mf_rate, &taps)?;
    resample(&filtered, 2.0 * baud_hz)
}

/// Everything one method produces for one capture.
#[derive(Debug, Clone)]
pub struct RxOutcome {
    pub estimate: SkewEstimate,
    pub solution: EqualizerSolution,
    /// Widely-linear equalizer output, one point per frame symbol.
    pub equalized: Vec<Complex64>,
    pub ber_compensated: f64,
    /// EVM after the strictly-linear equalizer, which leaves skew uncompensated.
    pub evm_uncompensated_pct: f64,
    pub ber_uncompensated: f64,
    pub lag_symbols: i64,
    pub rotation: u8,
}

/// Matched filter, sync, carrier recovery, both equalizers and the skew readout.
pub fn receive(
    baseband: &ComplexSignal,
    frame: &SymbolFrame,
    rx: &RxConfig,
    baud_hz: f64,
    rolloff: f64,
    method: Method,
    foe_hz: f64,
) -> Result<RxOutcome> {
    let v = rx.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let two_sps = matched_filter_2sps(baseband, baud_hz, rolloff, rx.rrc_span_symbols)?;
    let sync = synchronize(&two_sps, frame)?;
    let recovered = carrier_recover(&sync.aligned, frame, rx.cr_block_len)?;

    let (solution, equalized) = wiener_equalize(&recovered, frame, rx.n_taps)?;
    let skew_s = estimate_skew(&solution, rx.band_fraction)?;
    let evm_pct = evm(&equalized, frame)?;
    let ber_compensated = metrics::ber_unchecked(&equalized, frame)?;

    let (_, blind) = linear_equalize(&recovered, frame, rx.n_taps)?;
    let evm_uncompensated_pct = evm(&blind, frame)?;
    let ber_uncompensated = metrics::ber_unchecked(&blind, frame)?;

    Ok(RxOutcome {
        estimate: SkewEstimate {
            skew_s,
            method,
            evm_pct,
            foe_hz,
            residual_error: solution.residual_error,
        },
        solution,
        equalized,
        ber_compensated,
        evm_uncompensated_pct,
        ber_uncompensated,
        lag_symbols: sync.lag,
        rotation: sync.rotation,
    })
}
