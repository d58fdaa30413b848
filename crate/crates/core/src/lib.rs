//! Transmitter IQ skew calibration by heterodyne direct detection.
//!
//! The crate simulates a QAM transmitter with a known IQ skew, the
//! tone-assisted square-law receiver that observes it, and the DSP that
//! recovers the field and reads the skew back from the taps of a widely-linear
//! least-squares equalizer.
//!
//! Stage map:
//!
//! * [`waveform`]: sampled-signal types and FFT-domain primitives
//! * [`txsim`]: symbol generation, pulse shaping, skewed IQ modulator
//! * [`channel`]: heterodyne tone, photodetector, ADC
//! * [`fieldrec`]: Hilbert and Kramers–Kronig field reconstruction, 4th-power FOE
//! * [`rxdsp`]: sync, carrier recovery, Wiener equalizer, skew readout, EVM/BER
//! * [`cohd`]: ideal coherent-detection reference front end
//! * [`pipeline`]: one end-to-end trial from configs to estimates
//! * [`experiments`]: sweeps, Monte-Carlo statistics, OSNR penalty
//!
//! Times are seconds and frequencies hertz throughout the library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cohd;
pub mod error;
pub mod experiments;
pub mod fieldrec;
pub mod pipeline;
pub mod rxdsp;
pub mod txsim;
pub mod waveform;

pub use error::{Error, Result};
