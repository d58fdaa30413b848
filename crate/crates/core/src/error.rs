use thiserror::Error;

/// Failures raised by the calibration DSP chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "single-sideband condition violated: tone offset {tone_offset_hz:.4e} Hz must exceed signal band edge {band_edge_hz:.4e} Hz"
    )]
    SsbViolation {
        tone_offset_hz: f64,
        band_edge_hz: f64,
    },

    #[error("frequency offset estimation failed: no dominant 4th-power line ({peak_over_median_db:.1} dB over median)")]
    NoDominantLine { peak_over_median_db: f64 },

    #[error("insufficient CSPR: {clamped} of {total} samples nonpositive after DC restoration")]
    InsufficientCspr { clamped: usize, total: usize },

    #[error("sync failed: peak-to-sidelobe ratio {psr:.2}")]
    SyncFailed { psr: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("trial failures: {failed} of {total} exceeded budget")]
    TooManyFailures { failed: usize, total: usize },
}

impl Error {
    /// True for failures of the signal processing itself (sync, FOE, CSPR, singular fits),
    /// as opposed to bad arguments.
    pub fn is_dsp_failure(&self) -> bool {
        matches!(
            self,
            Error::NoDominantLine { .. }
                | Error::InsufficientCspr { .. }
                | Error::SyncFailed { .. }
                | Error::Degenerate(_)
                | Error::TooManyFailures { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
