use crate::error::{Error, Result};
use crate::txsim::{Constellation, SymbolFrame, GUARD_SYMBOLS};
use num_complex::Complex64;
use statrs::function::erf::erfc;

/// Minimum number of compared bits for a hard-decision BER.
pub const MIN_BER_BITS: usize = 10_000;

fn scored_range(y: &[Complex64], frame: &SymbolFrame) -> Result<std::ops::Range<usize>> {
    if y.len() != frame.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: frame.len(),
        });
    }
    if frame.len() <= 2 * GUARD_SYMBOLS {
        return Err(Error::InvalidParameter(format!(
            "frame of {} symbols leaves nothing outside the guard",
            frame.len()
        )));
    }
    Ok(GUARD_SYMBOLS..frame.len() - GUARD_SYMBOLS)
}

/// RMS error vector magnitude in percent of the RMS reference amplitude,
/// excluding the guard symbols at both frame ends.
pub fn evm(y: &[Complex64], frame: &SymbolFrame) -> Result<f64> {
    let r = scored_range(y, frame)?;
    let (err, refp) = r.fold((0.0, 0.0), |(e, p), k| {
        (
            e + (y[k] - frame.symbols[k]).norm_sqr(),
            p + frame.symbols[k].norm_sqr(),
        )
    });
    Ok(100.0 * (err / refp).sqrt())
}

pub(crate) fn ber_unchecked(y: &[Complex64], frame: &SymbolFrame) -> Result<f64> {
    let r = scored_range(y, frame)?;
    let c = frame.constellation();
    let bps = c.bits_per_symbol();
    let mut decided = Vec::with_capacity(bps);
    let mut errors = 0usize;
    for k in r.clone() {
        decided.clear();
        c.demap_into(y[k], &mut decided);
        errors += decided
            .iter()
            .zip(&frame.bits[k * bps..(k + 1) * bps])
            .filter(|(a, b)| a != b)
            .count();
    }
    Ok(errors as f64 / (r.len() * bps) as f64)
}

/// Gray hard-decision bit error ratio outside the guard symbols.
pub fn ber(y: &[Complex64], frame: &SymbolFrame) -> Result<f64> {
    let c = frame.constellation();
    let bits = frame.len().saturating_sub(2 * GUARD_SYMBOLS) * c.bits_per_symbol();
    if bits < MIN_BER_BITS {
        return Err(Error::InvalidParameter(format!(
            "{bits} bits is too few for a BER estimate (need {MIN_BER_BITS})"
        )));
    }
    ber_unchecked(y, frame)
}

fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Expected bit errors when PAM level `tx` is received as `mean + N(0, sigma^2)`.
fn dim_bit_errors(c: &Constellation, tx: usize, mean: f64, sigma: f64) -> f64 {
    let l = c.levels();
    let tx_label = c.gray_label(tx);
    (0..l)
        .filter(|&r| r != tx)
        .map(|r| {
            // Decision region of level r: thresholds halfway between levels.
            let lower = if r == 0 {
                1.0
            } else {
                q_func(((2.0 * r as f64 - l as f64) * c.scale() - mean) / sigma)
            };
            let upper = if r == l - 1 {
                0.0
            } else {
                q_func(((2.0 * (r + 1) as f64 - l as f64) * c.scale() - mean) / sigma)
            };
            let flips = (c.gray_label(r) ^ tx_label).count_ones() as f64;
            (lower - upper) * flips
        })
        .sum()
}

/// Expected Gray hard-decision BER when independent Gaussian noise of standard
/// deviation `sigma_per_dim` is added to the noise-free equalizer output `y`.
pub fn ber_semi_analytic(y: &[Complex64], frame: &SymbolFrame, sigma_per_dim: f64) -> Result<f64> {
    let r = scored_range(y, frame)?;
    if !(sigma_per_dim > 0.0) {
        return Err(Error::InvalidParameter(
            "noise deviation must be positive".into(),
        ));
    }
    let c = frame.constellation();
    let n = r.len();
    let errors: f64 = r
        .map(|k| {
            let s = frame.symbols[k];
            dim_bit_errors(&c, c.slice_dim(s.re), y[k].re, sigma_per_dim)
                + dim_bit_errors(&c, c.slice_dim(s.im), y[k].im, sigma_per_dim)
        })
        .sum();
    Ok(errors / (n * c.bits_per_symbol()) as f64)
}

/// Exact Gray-coded square-QAM BER over AWGN at the given Es/N0, with
/// equiprobable symbols.
pub fn gray_ber_closed_form(mod_order: u32, es_n0_db: f64) -> Result<f64> {
    let c = Constellation::new(mod_order)?;
    let es_n0 = 10f64.powf(es_n0_db / 10.0);
    // Unit symbol energy; N0/2 per real dimension.
    let sigma = (0.5 / es_n0).sqrt();
    let l = c.levels();
    let per_dim: f64 = (0..l)
        .map(|tx| {
            let mean = (2.0 * tx as f64 - (l as f64 - 1.0)) * c.scale();
            dim_bit_errors(&c, tx, mean, sigma)
        })
        .sum::<f64>()
        / l as f64;
    Ok(per_dim / c.bits_per_dim() as f64)
}
