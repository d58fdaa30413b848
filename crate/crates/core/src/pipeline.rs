//! End-to-end trial plumbing shared by the experiments and the CLI.
//!
//! A detected capture goes through exactly one code path,
//! [`calibrate_capture`], whether it was simulated in process or read back
//! from a file.

use crate::channel::{detect, DetConfig};
use crate::error::{Error, Result};
use crate::fieldrec::{reconstruct_hilbert, reconstruct_kk, FieldRecParams, Method};
use crate::rxdsp::{receive, RxConfig, RxOutcome, MATCHED_FILTER_SPS};
use crate::txsim::{transmit, SymbolFrame, TxConfig};
use crate::waveform::{resample_real, ComplexSignal, RealSignal};

/// Transmitter, heterodyne tone, photodetector and ADC.
#[derive(Debug, Clone)]
pub struct Capture {
    pub frame: SymbolFrame,
    /// Transmitted optical field, kept for the coherent reference path.
    pub field: ComplexSignal,
    /// Digitized photocurrent.
    pub current: RealSignal,
}

pub fn simulate_capture(tx: &TxConfig, det: &DetConfig) -> Result<Capture> {
    tx.validate()?;
    let v = det.violations(tx.band_edge_hz());
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let (frame, field) = transmit(tx)?;
    let current = detect(&field, det, tx.band_edge_hz())?;
    Ok(Capture {
        frame,
        field,
        current,
    })
}

/// Resamples a photocurrent to 8 samples per symbol, reconstructs the field
/// with `method` and runs the receiver.
pub fn calibrate_capture(
    current: &RealSignal,
    frame: &SymbolFrame,
    params: &FieldRecParams,
    rx: &RxConfig,
    method: Method,
) -> Result<RxOutcome> {
    let target = MATCHED_FILTER_SPS as f64 * params.baud_hz;
    let at_8sps = if (current.sample_rate_hz() / target - 1.0).abs() < 1e-12 {
        current.clone()
    } else {
        resample_real(current, target)?
    };
    let rec = match method {
        Method::Hilbert => reconstruct_hilbert(&at_8sps, params)?,
        Method::Kk => reconstruct_kk(&at_8sps, params)?,
        Method::Cohd => {
            return Err(Error::InvalidParameter(
                "coherent detection does not start from a photocurrent".into(),
            ))
        }
    };
    receive(
        &rec.field,
        frame,
        rx,
        params.baud_hz,
        params.rolloff,
        method,
        rec.foe_hz,
    )
}
