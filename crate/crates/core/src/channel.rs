//! Heterodyne direct detection: a frequency-offset tone is added to the
//! modulated field, the sum is square-law detected by a band-limited
//! photodiode, and the photocurrent is digitized.
//!
//! The photocurrent contains a DC term, the tone/signal beat (which carries the
//! field) and the signal-signal beat. Nothing here removes any of them.

use crate::error::{Error, Result};
use crate::waveform::{
    fft_forward, fft_inverse, resample_real, signed_bin, ComplexSignal, RealSignal,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TONE_PHASE_STREAM: u64 = 1;
const ADC_NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetConfig {
    /// Frequency of the auxiliary tone relative to the signal carrier.
    pub tone_offset_hz: f64,
    /// Tone power over signal power.
    pub cspr_db: f64,
    /// -3 dB bandwidth of the photodiode.
    pub pd_bandwidth_hz: f64,
    pub adc_rate_hz: f64,
    /// Quantizer resolution; `None` leaves samples unquantized.
    pub adc_bits: Option<u32>,
    /// Electrical SNR of added white noise, referenced to the AC photocurrent power.
    pub snr_db: Option<f64>,
    /// Lorentzian linewidth of the tone laser; 0 disables phase noise.
    pub tone_linewidth_hz: f64,
    pub rng_seed: u64,
}

impl Default for DetConfig {
    fn default() -> Self {
        Self {
            tone_offset_hz: 21e9,
            cspr_db: 13.5,
            pd_bandwidth_hz: 37e9,
            adc_rate_hz: 160e9,
            adc_bits: Some(8),
            snr_db: None,
            tone_linewidth_hz: 0.0,
            rng_seed: 1,
        }
    }
}

impl DetConfig {
    /// Ideal digitizer: no added noise, no quantization.
    pub fn noiseless() -> Self {
        Self {
            adc_bits: None,
            snr_db: None,
            ..Self::default()
        }
    }

    /// The Monte-Carlo noise setting: 25 dB electrical SNR, 8-bit ADC.
    pub fn default_noise() -> Self {
        Self {
            adc_bits: Some(8),
            snr_db: Some(25.0),
            ..Self::default()
        }
    }

    pub fn violations(&self, band_edge_hz: f64) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.tone_offset_hz.is_finite() && self.tone_offset_hz > band_edge_hz) {
            v.push(format!(
                "tone_offset {:.3} GHz must exceed the signal band edge {:.3} GHz",
                self.tone_offset_hz * 1e-9,
                band_edge_hz * 1e-9
            ));
        }
        if !self.cspr_db.is_finite() {
            v.push("cspr_db must be finite".into());
        }
        if !(self.pd_bandwidth_hz.is_finite() && self.pd_bandwidth_hz > 0.0) {
            v.push(format!(
                "pd_bandwidth must be positive, got {}",
                self.pd_bandwidth_hz
            ));
        }
        if !(self.adc_rate_hz.is_finite() && self.adc_rate_hz > 0.0) {
            v.push(format!(
                "adc_rate must be positive, got {}",
                self.adc_rate_hz
            ));
        }
        if let Some(b) = self.adc_bits {
            if !(1..=24).contains(&b) {
                v.push(format!("adc_bits must be in 1..=24, got {b}"));
            }
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                v.push("snr_db must be finite".into());
            }
        }
        if !(self.tone_linewidth_hz.is_finite() && self.tone_linewidth_hz >= 0.0) {
            v.push("tone_linewidth must be nonnegative".into());
        }
        v
    }

    /// Non-fatal issues: the ADC cannot represent the full beat band.
    pub fn warnings(&self, band_edge_hz: f64) -> Vec<String> {
        let top = self.tone_offset_hz + band_edge_hz;
        if self.adc_rate_hz <= 2.0 * top {
            vec![format!(
                "adc_rate {:.1} GSa/s is below twice the beat band top {:.1} GHz",
                self.adc_rate_hz * 1e-9,
                top * 1e-9
            )]
        } else {
            Vec::new()
        }
    }

    /// Tone amplitude for a signal of mean power `signal_power`.
    pub fn tone_amplitude(&self, signal_power: f64) -> f64 {
        (10f64.powf(self.cspr_db / 10.0) * signal_power).sqrt()
    }
}

/// Adds `A·exp(j(2 pi f_tone t + phi(t)))` to the field. `band_edge_hz` is the
/// signal's one-sided bandwidth; the tone must sit outside it so the beat term
/// is single-sideband.
pub fn add_tone(
    field: &ComplexSignal,
    det: &DetConfig,
    band_edge_hz: f64,
) -> Result<ComplexSignal> {
    if !(det.tone_offset_hz > band_edge_hz) {
        return Err(Error::SsbViolation {
            tone_offset_hz: det.tone_offset_hz,
            band_edge_hz,
        });
    }
    let fs = field.sample_rate_hz();
    let amp = det.tone_amplitude(field.power());
    let phase = tone_phase(field.len(), fs, det)?;
    let cycles_per_sample = det.tone_offset_hz / fs;
    let samples = field
        .samples()
        .iter()
        .zip(&phase)
        .enumerate()
        .map(|(i, (&e, &phi))| {
            let c = (cycles_per_sample * i as f64).rem_euclid(1.0);
            e + Complex64::from_polar(amp, 2.0 * PI * c + phi)
        })
        .collect();
    ComplexSignal::new(samples, fs)
}

/// Wiener-process phase of the tone laser; identically zero for zero linewidth.
fn tone_phase(n: usize, fs: f64, det: &DetConfig) -> Result<Vec<f64>> {
    if det.tone_linewidth_hz == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let sigma = (2.0 * PI * det.tone_linewidth_hz / fs).sqrt();
    let normal =
        Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("linewidth: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(det.rng_seed);
    rng.set_stream(TONE_PHASE_STREAM);
    let mut acc = 0.0;
    Ok((0..n)
        .map(|_| {
            let v = acc;
            acc += normal.sample(&mut rng);
            v
        })
        .collect())
}

/// Ideal square-law detection, `|E|^2`, without any bandwidth limit.
pub fn square_law(field: &ComplexSignal) -> RealSignal {
    RealSignal::from_trusted(
        field.samples().iter().map(|v| v.norm_sqr()).collect(),
        field.sample_rate_hz(),
    )
}

/// Zero-phase 4th-order Gaussian magnitude response: `|H(f)|^2 = 2^-(f/B)^4`,
/// i.e. -3 dB at `B`.
pub fn pd_response(f_hz: f64, bandwidth_hz: f64) -> f64 {
    0.5f64.powf(0.5 * (f_hz / bandwidth_hz).powi(4))
}

/// Photodiode: square law followed by the linear-phase bandwidth model.
pub fn photodetect(total_field: &ComplexSignal, det: &DetConfig) -> Result<RealSignal> {
    let raw = square_law(total_field);
    let n = raw.len();
    let fs = raw.sample_rate_hz();
    let mut spec: Vec<Complex64> = raw
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_forward(&mut spec);
    for (k, v) in spec.iter_mut().enumerate() {
        let f = signed_bin(k, n) as f64 * fs / n as f64;
        *v *= pd_response(f, det.pd_bandwidth_hz);
    }
    fft_inverse(&mut spec);
    RealSignal::new(spec.into_iter().map(|v| v.re).collect(), fs)
}

/// Digitizer: resample to the ADC rate, add seeded white noise, quantize.
pub fn adc(current: &RealSignal, det: &DetConfig) -> Result<RealSignal> {
    let sampled = resample_real(current, det.adc_rate_hz)?;
    let fs = sampled.sample_rate_hz();
    let mut x = sampled.into_samples();

    if let Some(snr_db) = det.snr_db {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let ac_power = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        let sigma = (ac_power / 10f64.powf(snr_db / 10.0)).sqrt();
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(det.rng_seed);
            rng.set_stream(ADC_NOISE_STREAM);
            for v in x.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }

    if let Some(bits) = det.adc_bits {
        quantize(&mut x, bits);
    }
    RealSignal::new(x, fs)
}

/// Uniform mid-tread quantizer with `2^bits` levels spanning the observed range.
fn quantize(x: &mut [f64], bits: u32) {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let steps = ((1u64 << bits) - 1) as f64;
    let lsb = (hi - lo) / steps;
    if !(lsb > 0.0) {
        return;
    }
    for v in x.iter_mut() {
        *v = lo + ((*v - lo) / lsb).round().clamp(0.0, steps) * lsb;
    }
}

/// Tone, photodiode and ADC in sequence.
pub fn detect(field: &ComplexSignal, det: &DetConfig, band_edge_hz: f64) -> Result<RealSignal> {
    let total = add_tone(field, det, band_edge_hz)?;
    let current = photodetect(&total, det)?;
    adc(&current, det)
}
