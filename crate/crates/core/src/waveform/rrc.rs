use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Root-raised-cosine impulse response, `span_symbols * sps + 1` taps, unit energy.
///
/// The middle tap is the pulse peak.
pub fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::InvalidParameter(format!(
            "rolloff must be in [0, 1], got {rolloff}"
        )));
    }
    if span_symbols < 8 || sps < 2 {
        return Err(Error::InvalidParameter(format!(
            "RRC needs span >= 8 symbols and sps >= 2, got span {span_symbols}, sps {sps}"
        )));
    }
    let len = span_symbols * sps + 1;
    let center = (len - 1) as f64 / 2.0;
    let a = rolloff;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = (i as f64 - center) / sps as f64;
            rrc_at(t, a)
        })
        .collect();
    let energy = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in taps.iter_mut() {
        *v /= energy;
    }
    Ok(taps)
}

/// Unnormalized RRC pulse at `t` symbol periods.
fn rrc_at(t: f64, a: f64) -> f64 {
    const EPS: f64 = 1e-12;
    if t.abs() < EPS {
        return 1.0 - a + 4.0 * a / PI;
    }
    if a > 0.0 && ((4.0 * a * t).abs() - 1.0).abs() < EPS {
        let arg = PI / (4.0 * a);
        return a / 2f64.sqrt() * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * t * (1.0 - a)).sin() + 4.0 * a * t * (PI * t * (1.0 + a)).cos();
    let den = PI * t * (1.0 - (4.0 * a * t).powi(2));
    num / den
}
