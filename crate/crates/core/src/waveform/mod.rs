//! Uniformly sampled waveforms and the FFT-domain primitives shared by every
//! stage of the chain.
//!
//! All spectral operations are circular: a record is treated as one period of
//! a periodic signal. That keeps every operation exactly invertible, and the
//! transmitter generates periodic frames so no edge transients appear.

mod fft;
mod group_delay;
mod rrc;
mod spectral;

pub use fft::{fft_forward, fft_inverse, signed_bin};
pub use group_delay::group_delay;
pub use rrc::rrc_taps;
pub use spectral::{
    apply_fir_centered, brickwall_lowpass, fractional_delay, frequency_shift, hilbert_analytic,
    resample, resample_real, FractionalDelay,
};

use crate::error::{Error, Result};
use num_complex::Complex64;

fn check_common(len: usize, sample_rate_hz: f64) -> Result<()> {
    if len < 2 {
        return Err(Error::InvalidSignal(format!(
            "need at least 2 samples, got {len}"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidSignal(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    Ok(())
}

/// Real-valued sampled waveform (photocurrent, DAC drive).
#[derive(Debug, Clone, PartialEq)]
pub struct RealSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl RealSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        check_common(samples.len(), sample_rate_hz)?;
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample {} at index {i}",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn to_complex(&self) -> ComplexSignal {
        ComplexSignal {
            samples: self
                .samples
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Complex-valued sampled waveform (optical field, reconstructed baseband).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        check_common(samples.len(), sample_rate_hz)?;
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample {} at index {i}",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_parts(re: &[f64], im: &[f64], sample_rate_hz: f64) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::LengthMismatch {
                left: re.len(),
                right: im.len(),
            });
        }
        let samples = re
            .iter()
            .zip(im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean of |x|².
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn re(&self) -> RealSignal {
        RealSignal {
            samples: self.samples.iter().map(|v| v.re).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn im(&self) -> RealSignal {
        RealSignal {
            samples: self.samples.iter().map(|v| v.im).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn scaled(&self, gain: Complex64) -> ComplexSignal {
        ComplexSignal {
            samples: self.samples.iter().map(|&v| v * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Scales to unit mean power. Returns the signal unchanged when it is all zeros.
    pub fn normalized(&self) -> ComplexSignal {
        let p = self.power();
        if p > 0.0 {
            self.scaled(Complex64::new(1.0 / p.sqrt(), 0.0))
        } else {
            self.clone()
        }
    }

    pub fn conj(&self) -> ComplexSignal {
        ComplexSignal {
            samples: self.samples.iter().map(|v| v.conj()).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    // Callers guarantee finiteness (outputs of linear ops on finite inputs).
    pub(crate) fn from_trusted(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        debug_assert!(samples.len() >= 2);
        Self {
            samples,
            sample_rate_hz,
        }
    }
}

impl RealSignal {
    pub(crate) fn from_trusted(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        debug_assert!(samples.len() >= 2);
        Self {
            samples,
            sample_rate_hz,
        }
    }
}
