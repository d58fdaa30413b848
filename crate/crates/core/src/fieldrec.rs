//! Field reconstruction from the heterodyne photocurrent.
//!
//! With the tone above the carrier, the beat term places the signal on the
//! lower sideband of the photocurrent at `-f_tone`. Both reconstructions
//! therefore return the negative-frequency half of the photocurrent (the
//! conjugate of the usual analytic signal), estimate the exact offset with the
//! 4th-power method, shift to baseband and low-pass. The Hilbert route keeps
//! the signal-signal beat as a residual; the Kramers–Kronig route removes it
//! when the field is minimum phase.

use crate::error::{Error, Result};
use crate::waveform::hilbert_analytic;
use crate::waveform::{
    brickwall_lowpass, fft_forward, fft_inverse, frequency_shift, resample_real, signed_bin,
    ComplexSignal, RealSignal,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Clamp floor for the KK logarithm, relative to the mean photocurrent.
pub const KK_CLAMP_FRACTION: f64 = 1e-6;
/// Largest tolerated fraction of clamped samples.
pub const KK_CLAMP_BUDGET: f64 = 1e-3;
/// Digital oversampling applied before the KK nonlinearities.
pub const KK_UPSAMPLING: f64 = 2.0;
/// Minimum 4th-power line height over the spectral median.
pub const FOE_MIN_PEAK_DB: f64 = 6.0;
/// Bins notched around the downshifted tone position.
pub const TONE_NOTCH_BINS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hilbert,
    Kk,
    Cohd,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Hilbert => "hilbert",
            Method::Kk => "kk",
            Method::Cohd => "cohd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hilbert" => Ok(Method::Hilbert),
            "kk" => Ok(Method::Kk),
            "cohd" => Ok(Method::Cohd),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the receiver knows about the signal it reconstructs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecParams {
    /// Operator-set tone offset; seeds the FOE search.
    pub tone_offset_coarse_hz: f64,
    pub baud_hz: f64,
    pub rolloff: f64,
    /// Extra low-pass width beyond the `(1 + rolloff) * baud / 2` band edge.
    pub lowpass_margin_hz: f64,
}

impl FieldRecParams {
    pub fn new(tone_offset_coarse_hz: f64, baud_hz: f64, rolloff: f64) -> Self {
        Self {
            tone_offset_coarse_hz,
            baud_hz,
            rolloff,
            lowpass_margin_hz: 0.01 * baud_hz,
        }
    }

    pub fn lowpass_cutoff_hz(&self) -> f64 {
        0.5 * (1.0 + self.rolloff) * self.baud_hz + self.lowpass_margin_hz
    }
}

/// Baseband field at the input sample rate, unit mean power.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: ComplexSignal,
    /// Estimated frequency of the signal before compensation.
    pub foe_hz: f64,
}

/// 4th-power frequency offset estimate.
///
/// Finds the peak of the spectrum of `x^4` within `±baud/2` of
/// `4 * f_coarse_hz`, refines it by a parabola through the three bins around
/// the peak and returns a quarter of the peak frequency. The coarse value
/// resolves the `fs/4` ambiguity of the 4th-power line.
pub fn estimate_foe(x: &ComplexSignal, f_coarse_hz: f64, baud_hz: f64) -> Result<f64> {
    let n = x.len();
    let fs = x.sample_rate_hz();
    let mut spec: Vec<Complex64> = x.samples().iter().map(|v| (v * v) * (v * v)).collect();
    fft_forward(&mut spec);
    let mag: Vec<f64> = spec.iter().map(|v| v.norm_sqr()).collect();

    let bin_hz = fs / n as f64;
    let center = 4.0 * f_coarse_hz / bin_hz;
    let half = (0.5 * baud_hz / bin_hz).max(1.0);
    let lo = (center - half).ceil() as i64;
    let hi = (center + half).floor() as i64;
    let idx = |b: i64| b.rem_euclid(n as i64) as usize;
    let (peak_b, peak) =
        (lo..=hi)
            .map(|b| (b, mag[idx(b)]))
            .fold(
                (lo, f64::NEG_INFINITY),
                |acc, v| if v.1 > acc.1 { v } else { acc },
            );

    let mut sorted = mag.clone();
    let mid = sorted.len() / 2;
    let (_, median, _) = sorted.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let median = *median;
    let ratio_db = if peak > 0.0 && median > 0.0 {
        10.0 * (peak / median).log10()
    } else if peak > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    if !(ratio_db >= FOE_MIN_PEAK_DB) {
        return Err(Error::NoDominantLine {
            peak_over_median_db: ratio_db,
        });
    }

    let (ym, y0, yp) = (
        mag[idx(peak_b - 1)].sqrt(),
        peak.sqrt(),
        mag[idx(peak_b + 1)].sqrt(),
    );
    let denom = ym - 2.0 * y0 + yp;
    let frac = if denom != 0.0 {
        (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    // Express the peak as a signed frequency near the search center.
    let f4 = (peak_b as f64 + frac) * bin_hz;
    Ok(f4 / 4.0)
}

/// Zeroes `TONE_NOTCH_BINS` bins centered on `f_hz`.
fn notch(x: &ComplexSignal, f_hz: f64) -> ComplexSignal {
    let n = x.len();
    let fs = x.sample_rate_hz();
    let mut spec = x.samples().to_vec();
    fft_forward(&mut spec);
    let center = (f_hz * n as f64 / fs).round() as i64;
    let half = (TONE_NOTCH_BINS / 2) as i64;
    for b in center - half..=center + half {
        spec[b.rem_euclid(n as i64) as usize] = Complex64::new(0.0, 0.0);
    }
    fft_inverse(&mut spec);
    ComplexSignal::from_trusted(spec, fs)
}

/// Shared tail of both reconstructions: FOE, baseband shift, tone notch,
/// anti-alias low-pass and power normalization. `bandpass` carries the signal
/// near `-tone_offset` and any tone/DC residual at 0 Hz.
fn to_baseband(bandpass: &ComplexSignal, params: &FieldRecParams) -> Result<Reconstruction> {
    let foe = estimate_foe(bandpass, -params.tone_offset_coarse_hz, params.baud_hz)?;
    let shifted = frequency_shift(bandpass, foe);
    // Whatever sat at 0 Hz now sits at -foe.
    let notched = notch(&shifted, -foe);
    let filtered = brickwall_lowpass(&notched, params.lowpass_cutoff_hz())?;
    if !(filtered.power() > 0.0) {
        return Err(Error::Degenerate(
            "no in-band signal after reconstruction".into(),
        ));
    }
    Ok(Reconstruction {
        field: filtered.normalized(),
        foe_hz: foe,
    })
}

/// Hilbert reconstruction: DC removal, analytic signal, baseband tail.
/// No signal-signal beat cancellation is attempted.
pub fn reconstruct_hilbert(
    current: &RealSignal,
    params: &FieldRecParams,
) -> Result<Reconstruction> {
    let mean = current.mean();
    let ac = RealSignal::new(
        current.samples().iter().map(|v| v - mean).collect(),
        current.sample_rate_hz(),
    )?;
    let lower = hilbert_analytic(&ac)?.conj();
    to_baseband(&lower, params)
}

/// Minimum-phase field from a strictly positive intensity:
/// `sqrt(i) * exp(-j H[ln sqrt(i)])`, i.e. the lower-sideband solution.
///
/// Returns the field and the number of samples that had to be clamped.
pub fn kk_field(intensity: &[f64]) -> (Vec<Complex64>, usize) {
    let mean = intensity.iter().sum::<f64>() / intensity.len() as f64;
    let floor = KK_CLAMP_FRACTION * mean.abs().max(f64::MIN_POSITIVE);
    let mut clamped = 0;
    let log_amp: Vec<f64> = intensity
        .iter()
        .map(|&v| {
            let v = if v < floor {
                clamped += 1;
                floor
            } else {
                v
            };
            0.5 * v.ln()
        })
        .collect();
    let mut spec: Vec<Complex64> = log_amp.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut spec);
    let n = spec.len();
    // Hilbert transform kernel -j*sign(f); the lower-sideband phase is its negative.
    for (k, v) in spec.iter_mut().enumerate() {
        let b = signed_bin(k, n);
        let nyquist = n.is_multiple_of(2) && k == n / 2;
        *v *= if b == 0 || nyquist {
            Complex64::new(0.0, 0.0)
        } else if b > 0 {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
    }
    fft_inverse(&mut spec);
    let field = log_amp
        .iter()
        .zip(&spec)
        .map(|(&la, h)| Complex64::from_polar(la.exp(), -h.re))
        .collect();
    (field, clamped)
}

/// Kramers–Kronig reconstruction.
///
/// The photocurrent is upsampled 2x, clamped at `1e-6 x mean`, passed through
/// [`kk_field`], stripped of its mean (the tone) and brought back to the input
/// rate before the common baseband tail.
pub fn reconstruct_kk(current: &RealSignal, params: &FieldRecParams) -> Result<Reconstruction> {
    let fs = current.sample_rate_hz();
    let up = resample_real(current, KK_UPSAMPLING * fs)?;
    let (mut field, clamped) = kk_field(up.samples());
    let total = field.len();
    if clamped as f64 > KK_CLAMP_BUDGET * total as f64 {
        return Err(Error::InsufficientCspr { clamped, total });
    }
    let tone = field.iter().sum::<Complex64>() / total as f64;
    for v in field.iter_mut() {
        *v -= tone;
    }
    let up_field = ComplexSignal::new(field, up.sample_rate_hz())?;
    let down = crate::waveform::resample(&up_field, fs)?;
    to_baseband(&down, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kk_recovers_two_tone_minimum_phase_field() {
        let fs = 64e9;
        let n = 4096;
        let carrier = 1.0;
        let side = 0.1; // 20 dB below the carrier
        let f1 = (5e9 * n as f64 / fs).round() * fs / n as f64;
        let truth: Vec<Complex64> = (0..n)
            .map(|k| {
                let t = k as f64 / fs;
                Complex64::new(carrier, 0.0) + Complex64::from_polar(side, -2.0 * PI * f1 * t + 0.7)
            })
            .collect();
        let intensity: Vec<f64> = truth.iter().map(|v| v.norm_sqr()).collect();
        let (rec, clamped) = kk_field(&intensity);
        assert_eq!(clamped, 0);
        let err: f64 = rec
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let sig: f64 = truth.iter().map(|v| v.norm_sqr()).sum();
        let err_db = 10.0 * (err / sig).log10();
        assert!(err_db <= -40.0, "{err_db}");
    }

    #[test]
    fn foe_finds_qpsk_offset() {
        use crate::txsim::{transmit, TxConfig};
        let tx = TxConfig {
            mod_order: 4,
            n_symbols: 8192,
            intrinsic_skew_s: 0.0,
            ..TxConfig::default()
        };
        let (_, field) = transmit(&tx).unwrap();
        let f0 = 20e9;
        let x = frequency_shift(&field, -f0);
        let est = estimate_foe(&x, 20.3e9, tx.baud_hz).unwrap();
        assert!((est - f0).abs() <= tx.baud_hz * 1e-4, "{est}");

        let zero = estimate_foe(&field, 0.0, tx.baud_hz).unwrap();
        let resolution = field.sample_rate_hz() / field.len() as f64 / 4.0;
        assert!(zero.abs() <= resolution, "{zero}");
    }

    #[test]
    fn silent_input_has_no_line() {
        let x = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 1024], 272e9).unwrap();
        assert!(matches!(
            estimate_foe(&x, 21e9, 34e9),
            Err(Error::NoDominantLine { .. })
        ));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Hilbert, Method::Kk, Method::Cohd] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("foo".parse::<Method>().is_err());
    }
}
