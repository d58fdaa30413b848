use super::fft::{fft_forward, signed_bin};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Group delay of a real FIR, in seconds relative to tap 0.
///
/// The phase of the frequency response is evaluated on a dense grid over
/// `|f| <= band_fraction * tap_rate_hz / 2` (a fraction of the tap-rate
/// Nyquist frequency), unwrapped outward from DC, and fitted
/// with a straight line by least squares weighted by `|H(f)|^2`. The delay is
/// minus the fitted slope over 2 pi. The response is referenced to the middle
/// tap before unwrapping so the residual phase stays small.
pub fn group_delay(taps: &[f64], tap_rate_hz: f64, band_fraction: f64) -> Result<f64> {
    if taps.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "group delay needs at least 5 taps, got {}",
            taps.len()
        )));
    }
    if !(band_fraction > 0.0 && band_fraction <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "band fraction must be in (0, 0.5], got {band_fraction}"
        )));
    }
    if !(tap_rate_hz.is_finite() && tap_rate_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tap rate must be positive, got {tap_rate_hz}"
        )));
    }
    if taps.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite tap".into()));
    }
    if taps.iter().all(|&t| t == 0.0) {
        return Err(Error::Degenerate(
            "all-zero taps have no group delay".into(),
        ));
    }

    let n = taps.len();
    let grid = (8 * n).next_power_of_two().max(4096);
    let center = (n - 1) as f64 / 2.0;

    let mut h = vec![Complex64::new(0.0, 0.0); grid];
    for (dst, &t) in h.iter_mut().zip(taps) {
        dst.re = t;
    }
    fft_forward(&mut h);

    // Normalized frequency (cycles per tap) of each grid bin, re-centered.
    let kmax = (0.5 * band_fraction * grid as f64).floor() as usize;
    let response = |b: i64| -> (f64, Complex64) {
        let k = b.rem_euclid(grid as i64) as usize;
        let nu = signed_bin(k, grid) as f64 / grid as f64;
        let nu = if b == -(grid as i64 / 2) { -0.5 } else { nu };
        (
            nu,
            h[k] * Complex64::from_polar(1.0, 2.0 * PI * nu * center),
        )
    };

    let mut points: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * kmax + 1);
    let (nu0, h0) = response(0);
    let phase0 = h0.arg();
    points.push((nu0, phase0, h0.norm_sqr()));
    for dir in [1i64, -1] {
        let mut prev = phase0;
        for step in 1..=kmax as i64 {
            let (nu, hv) = response(dir * step);
            let raw = hv.arg();
            let mut d = raw - prev;
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            let phase = prev + d;
            points.push((nu, phase, hv.norm_sqr()));
            prev = phase;
        }
    }

    let wsum: f64 = points.iter().map(|p| p.2).sum();
    if !(wsum > 0.0) {
        return Err(Error::Degenerate("no response energy in fit band".into()));
    }
    let mean_nu = points.iter().map(|p| p.2 * p.0).sum::<f64>() / wsum;
    let mean_ph = points.iter().map(|p| p.2 * p.1).sum::<f64>() / wsum;
    let sxy: f64 = points
        .iter()
        .map(|p| p.2 * (p.0 - mean_nu) * (p.1 - mean_ph))
        .sum();
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mean_nu).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate(
            "fit band too narrow for a phase slope".into(),
        ));
    }
    // Phase slope in radians per (cycle/tap) -> delay in taps.
    let delay_taps = -(sxy / sxx) / (2.0 * PI) + center;
    Ok(delay_taps / tap_rate_hz)
}
