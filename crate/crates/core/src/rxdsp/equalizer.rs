//! Least-squares equalizers at 2 samples per symbol.
//!
//! Output `k` is the convolution `sum_m w[m] * x[2k + h - m]` with
//! `h = (n_taps - 1) / 2` and circular indexing over exactly two samples per
//! frame symbol. Because the input is periodic in the frame, the normal equations only depend on the
//! tap-offset parity and the lag, so they are assembled from a small set of
//! correlations instead of a full data matrix. The solve runs on the
//! time-reversed taps, `w[h - m]`, which is the natural order for that form.

use crate::error::{Error, Result};
use crate::txsim::SymbolFrame;
use crate::waveform::ComplexSignal;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Diagonal loading, relative to the mean diagonal of the normal matrix.
pub const RIDGE_RELATIVE: f64 = 1e-6;

/// Widely-linear 2x2 real equalizer: `yI = ii*xI + iq*xQ`, `yQ = qi*xI + qq*xQ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerSolution {
    pub taps_ii: Vec<f64>,
    pub taps_iq: Vec<f64>,
    pub taps_qi: Vec<f64>,
    pub taps_qq: Vec<f64>,
    pub tap_rate_hz: f64,
    /// Normalized mean-square error `sum |y - d|^2 / sum |d|^2` over the frame.
    pub residual_error: f64,
}

/// Strictly-linear complex equalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEqualizer {
    pub taps: Vec<Complex64>,
    pub tap_rate_hz: f64,
    pub residual_error: f64,
}

impl LinearEqualizer {
    /// Applies the taps to any 2-samples-per-symbol signal of the frame length.
    pub fn apply(&self, x: &[Complex64], n_symbols: usize) -> Vec<Complex64> {
        let n = 2 * n_symbols;
        let h = (self.taps.len() - 1) / 2;
        (0..n_symbols)
            .map(|k| {
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * x[(2 * k + n + h - j) % n])
                    .sum()
            })
            .collect()
    }
}

struct Correlations {
    n_taps: usize,
    h: usize,
    /// `xc[u][v][p][d + n_taps - 1] = sum_k u[2k + p] v[2k + p + d]`.
    xc: [[[Vec<f64>; 2]; 2]; 2],
    /// `rhs[u][t][j] = sum_k u[2k + j - h] * target_t[k]`.
    rhs: [[Vec<f64>; 2]; 2],
    target_energy: f64,
}

impl Correlations {
    fn new(x: &[Complex64], frame: &SymbolFrame, n_taps: usize) -> Result<Self> {
        let k_sym = frame.len();
        let n = 2 * k_sym;
        if n_taps < 3 || n_taps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "equalizer length must be odd and at least 3, got {n_taps}"
            )));
        }
        if x.len() < n {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: n,
            });
        }
        if n_taps > n / 2 {
            return Err(Error::InvalidParameter(format!(
                "{n_taps} taps is too long for a {k_sym}-symbol frame"
            )));
        }
        let h = (n_taps - 1) / 2;
        let parts: [Vec<f64>; 2] = [
            x[..n].iter().map(|v| v.re).collect(),
            x[..n].iter().map(|v| v.im).collect(),
        ];
        let targets: [Vec<f64>; 2] = [
            frame.symbols.iter().map(|s| s.re).collect(),
            frame.symbols.iter().map(|s| s.im).collect(),
        ];
        let lags = 2 * n_taps - 1;
        let mut xc: [[[Vec<f64>; 2]; 2]; 2] = Default::default();
        for (u, a) in parts.iter().enumerate() {
            for (v, b) in parts.iter().enumerate() {
                for (p, slot) in xc[u][v].iter_mut().enumerate() {
                    *slot = (0..lags)
                        .map(|li| {
                            let d = li as isize - (n_taps as isize - 1);
                            let off = (d.rem_euclid(n as isize)) as usize;
                            (0..k_sym)
                                .map(|k| {
                                    let i = 2 * k + p;
                                    let j = i + off;
                                    a[i] * b[if j >= n { j - n } else { j }]
                                })
                                .sum()
                        })
                        .collect();
                }
            }
        }
        let mut rhs: [[Vec<f64>; 2]; 2] = Default::default();
        for (u, a) in parts.iter().enumerate() {
            for (t, d) in targets.iter().enumerate() {
                rhs[u][t] = (0..n_taps)
                    .map(|j| (0..k_sym).map(|k| a[(2 * k + n + j - h) % n] * d[k]).sum())
                    .collect();
            }
        }
        let target_energy = frame.symbols.iter().map(|s| s.norm_sqr()).sum();
        Ok(Self {
            n_taps,
            h,
            xc,
            rhs,
            target_energy,
        })
    }

    /// `sum_k u[2k + a - h] v[2k + b - h]`.
    fn r(&self, u: usize, v: usize, a: usize, b: usize) -> f64 {
        let off = a as isize - self.h as isize;
        let p = off.rem_euclid(2) as usize;
        let d = b as isize - a as isize + self.n_taps as isize - 1;
        self.xc[u][v][p][d as usize]
    }

    fn block(&self, u: usize, v: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_taps, self.n_taps, |a, b| self.r(u, v, a, b))
    }
}

fn solve(mut a: DMatrix<f64>, rhs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let dim = a.nrows();
    let ridge = RIDGE_RELATIVE * a.trace() / dim as f64;
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(Error::Degenerate("equalizer input has no energy".into()));
    }
    for i in 0..dim {
        a[(i, i)] += ridge;
    }
    let chol = a.cholesky().ok_or_else(|| {
        Error::Degenerate("equalizer normal matrix is not positive definite".into())
    })?;
    Ok(rhs.iter().map(|b| chol.solve(b)).collect())
}

fn stack(
    top: &DMatrix<f64>,
    right: &DMatrix<f64>,
    left: &DMatrix<f64>,
    bottom: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = top.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(top);
    m.view_mut((0, n), (n, n)).copy_from(right);
    m.view_mut((n, 0), (n, n)).copy_from(left);
    m.view_mut((n, n), (n, n)).copy_from(bottom);
    m
}

fn concat(a: &[f64], b: &[f64]) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b).copied())
}

fn nmse(y: &[Complex64], frame: &SymbolFrame, energy: f64) -> f64 {
    y.iter()
        .zip(&frame.symbols)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / energy
}

/// Fits the widely-linear equalizer to the frame symbols by least squares and
/// returns it with its output (one point per symbol).
pub fn wiener_equalize(
    rx: &ComplexSignal,
    frame: &SymbolFrame,
    n_taps: usize,
) -> Result<(EqualizerSolution, Vec<Complex64>)> {
    let c = Correlations::new(rx.samples(), frame, n_taps)?;
    let a = stack(
        &c.block(0, 0),
        &c.block(0, 1),
        &c.block(1, 0),
        &c.block(1, 1),
    );
    let to_i = concat(&c.rhs[0][0], &c.rhs[1][0]);
    let to_q = concat(&c.rhs[0][1], &c.rhs[1][1]);
    let w = solve(a, &[to_i, to_q])?;
    let split = |v: &DVector<f64>| -> (Vec<f64>, Vec<f64>) {
        (
            v.rows(0, n_taps).iter().copied().collect(),
            v.rows(n_taps, n_taps).iter().copied().collect(),
        )
    };
    let (mut taps_ii, mut taps_iq) = split(&w[0]);
    let (mut taps_qi, mut taps_qq) = split(&w[1]);
    for t in [&mut taps_ii, &mut taps_iq, &mut taps_qi, &mut taps_qq] {
        t.reverse();
    }

    let k_sym = frame.len();
    let n = 2 * k_sym;
    let x = rx.samples();
    let h = c.h;
    let y: Vec<Complex64> = (0..k_sym)
        .map(|k| {
            let (mut yi, mut yq) = (0.0, 0.0);
            for j in 0..n_taps {
                let s = x[(2 * k + n + h - j) % n];
                yi += taps_ii[j] * s.re + taps_iq[j] * s.im;
                yq += taps_qi[j] * s.re + taps_qq[j] * s.im;
            }
            Complex64::new(yi, yq)
        })
        .collect();
    let residual_error = nmse(&y, frame, c.target_energy);
    Ok((
        EqualizerSolution {
            taps_ii,
            taps_iq,
            taps_qi,
            taps_qq,
            tap_rate_hz: rx.sample_rate_hz(),
            residual_error,
        },
        y,
    ))
}

fn linear_system(c: &Correlations) -> (DMatrix<f64>, DVector<f64>) {
    // Unknowns [wr; wi] with yI = wr*xI - wi*xQ and yQ = wr*xQ + wi*xI.
    let (rii, riq, rqi, rqq) = (c.block(0, 0), c.block(0, 1), c.block(1, 0), c.block(1, 1));
    let diag = &rii + &rqq;
    let off = &rqi - &riq;
    let a = stack(&diag, &off, &off.transpose(), &diag);
    let top: Vec<f64> = c.rhs[0][0]
        .iter()
        .zip(&c.rhs[1][1])
        .map(|(a, b)| a + b)
        .collect();
    let bottom: Vec<f64> = c.rhs[0][1]
        .iter()
        .zip(&c.rhs[1][0])
        .map(|(a, b)| a - b)
        .collect();
    (a, concat(&top, &bottom))
}

fn complex_taps(w: &DVector<f64>, n_taps: usize) -> Vec<Complex64> {
    (0..n_taps)
        .rev()
        .map(|j| Complex64::new(w[j], w[n_taps + j]))
        .collect()
}

/// Fits the strictly-linear complex equalizer and returns it with its output.
pub fn linear_equalize(
    rx: &ComplexSignal,
    frame: &SymbolFrame,
    n_taps: usize,
) -> Result<(LinearEqualizer, Vec<Complex64>)> {
    let c = Correlations::new(rx.samples(), frame, n_taps)?;
    let (a, b) = linear_system(&c);
    let w = solve(a, &[b])?;
    let mut eq = LinearEqualizer {
        taps: complex_taps(&w[0], n_taps),
        tap_rate_hz: rx.sample_rate_hz(),
        residual_error: 0.0,
    };
    let y = eq.apply(rx.samples(), frame.len());
    eq.residual_error = nmse(&y, frame, c.target_energy);
    Ok((eq, y))
}

/// Strictly-linear least-squares fits to `clean + sigma * noise` for any
/// `sigma`, without revisiting the samples.
///
/// The normal matrix is quadratic and the right-hand side linear in `sigma`,
/// so three correlation passes (clean, noise, clean + noise) give every fit.
pub struct NoiseLoadedFit {
    n_taps: usize,
    tap_rate_hz: f64,
    a_clean: DMatrix<f64>,
    a_cross: DMatrix<f64>,
    a_noise: DMatrix<f64>,
    b_clean: DVector<f64>,
    b_noise: DVector<f64>,
    target_energy: f64,
}

impl NoiseLoadedFit {
    pub fn new(
        clean: &ComplexSignal,
        noise: &ComplexSignal,
        frame: &SymbolFrame,
        n_taps: usize,
    ) -> Result<Self> {
        if clean.len() != noise.len() {
            return Err(Error::LengthMismatch {
                left: clean.len(),
                right: noise.len(),
            });
        }
        let sum: Vec<Complex64> = clean
            .samples()
            .iter()
            .zip(noise.samples())
            .map(|(a, b)| a + b)
            .collect();
        let cc = Correlations::new(clean.samples(), frame, n_taps)?;
        let cz = Correlations::new(noise.samples(), frame, n_taps)?;
        let cs = Correlations::new(&sum, frame, n_taps)?;
        let (a_clean, b_clean) = linear_system(&cc);
        let (a_noise, b_noise) = linear_system(&cz);
        let (a_sum, _) = linear_system(&cs);
        let a_cross = a_sum - &a_clean - &a_noise;
        Ok(Self {
            n_taps,
            tap_rate_hz: clean.sample_rate_hz(),
            a_clean,
            a_cross,
            a_noise,
            b_clean,
            b_noise,
            target_energy: cc.target_energy,
        })
    }

    pub fn fit(&self, sigma: f64) -> Result<LinearEqualizer> {
        let a = &self.a_clean + &self.a_cross * sigma + &self.a_noise * (sigma * sigma);
        let b = &self.b_clean + &self.b_noise * sigma;
        let w = solve(a.clone(), std::slice::from_ref(&b))?.remove(0);
        // |d|^2 - 2 w.b + w'Aw, without the ridge.
        let residual = self.target_energy - 2.0 * w.dot(&b) + w.dot(&(&a * &w));
        Ok(LinearEqualizer {
            taps: complex_taps(&w, self.n_taps),
            tap_rate_hz: self.tap_rate_hz,
            residual_error: (residual / self.target_energy).max(0.0),
        })
    }
}
