//! Skew sweeps, Monte-Carlo statistics and the OSNR-penalty curve.
//!
//! Trials run in parallel; results always come back in input order, so every
//! run is reproducible from its configuration alone.

use crate::channel::DetConfig;
use crate::cohd::calibrate_coherent;
use crate::error::{Error, Result};
use crate::fieldrec::{FieldRecParams, Method};
use crate::pipeline::{calibrate_capture, simulate_capture};
use crate::rxdsp::{
    ber_semi_analytic, matched_filter_2sps, synchronize, NoiseLoadedFit, RxConfig, RxOutcome,
};
use crate::txsim::{transmit, TxConfig};
use crate::waveform::ComplexSignal;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// OSNR reference bandwidth (0.1 nm at 1550 nm).
pub const OSNR_REFERENCE_BANDWIDTH_HZ: f64 = 12.5e9;
/// Monte-Carlo runs abort above this failed-trial fraction.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;
pub const HISTOGRAM_BINS: usize = 20;

/// Everything one trial needs besides the per-trial seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub tx: TxConfig,
    pub det: DetConfig,
    pub rx: RxConfig,
    pub methods: Vec<Method>,
    /// Local-oscillator offset of the coherent reference path.
    pub cohd_lo_offset_hz: f64,
}

impl Setup {
    pub fn new(tx: TxConfig, det: DetConfig) -> Self {
        Self {
            tx,
            det,
            rx: RxConfig::default(),
            methods: vec![Method::Hilbert, Method::Kk, Method::Cohd],
            cohd_lo_offset_hz: 0.0,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.tx.violations();
        v.extend(self.det.violations(self.tx.band_edge_hz()));
        v.extend(self.rx.violations());
        if self.methods.is_empty() {
            v.push("at least one method is required".into());
        }
        if !self.cohd_lo_offset_hz.is_finite()
            || self.cohd_lo_offset_hz.abs() > self.tx.baud_hz / 8.0
        {
            v.push(format!(
                "cohd_lo_offset {} Hz exceeds baud/8",
                self.cohd_lo_offset_hz
            ));
        }
        v
    }

    fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn cohd_seed(&self) -> u64 {
        derive_seed(self.det.rng_seed, 0xC0)
    }
}

/// SplitMix64 step: decorrelated seeds from a base seed and an index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub skew_s: f64,
    /// After the widely-linear equalizer.
    pub evm_pct: f64,
    /// After the strictly-linear equalizer (skew left in place).
    pub evm_blind_pct: f64,
    pub ber: f64,
    pub ber_blind: f64,
    pub foe_hz: f64,
    pub residual_error: f64,
}

impl From<&RxOutcome> for MethodMetrics {
    fn from(o: &RxOutcome) -> Self {
        Self {
            skew_s: o.estimate.skew_s,
            evm_pct: o.estimate.evm_pct,
            evm_blind_pct: o.evm_uncompensated_pct,
            ber: o.ber_compensated,
            ber_blind: o.ber_uncompensated,
            foe_hz: o.estimate.foe_hz,
            residual_error: o.estimate.residual_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub metrics: Option<MethodMetrics>,
    /// DSP failure message when `metrics` is absent.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub added_skew_s: f64,
    pub prbs_seed: u64,
    pub noise_seed: u64,
    pub results: Vec<MethodResult>,
}

impl TrialMetrics {
    pub fn get(&self, method: Method) -> Option<&MethodMetrics> {
        self.results
            .iter()
            .find(|r| r.method == method)
            .and_then(|r| r.metrics.as_ref())
    }

    pub fn failed(&self) -> bool {
        self.results.iter().any(|r| r.metrics.is_none())
    }
}

/// Runs one trial for every configured method. DSP failures are recorded per
/// method; configuration errors abort.
pub fn run_trial(setup: &Setup) -> Result<TrialMetrics> {
    setup.validate()?;
    let tx = &setup.tx;
    let needs_dd = setup.methods.iter().any(|m| *m != Method::Cohd);
    let (frame, field, current) = if needs_dd {
        let cap = simulate_capture(tx, &setup.det)?;
        (cap.frame, cap.field, Some(cap.current))
    } else {
        let (frame, field) = transmit(tx)?;
        (frame, field, None)
    };
    let params = FieldRecParams::new(setup.det.tone_offset_hz, tx.baud_hz, tx.rolloff);
    let mut results = Vec::with_capacity(setup.methods.len());
    for &method in &setup.methods {
        let outcome = match (method, &current) {
            (Method::Cohd, _) => calibrate_coherent(
                &field,
                &frame,
                &setup.rx,
                tx.baud_hz,
                tx.rolloff,
                setup.cohd_lo_offset_hz,
                setup.det.snr_db,
                setup.cohd_seed(),
            ),
            (_, Some(current)) => calibrate_capture(current, &frame, &params, &setup.rx, method),
            (_, None) => {
                unreachable!("photocurrent is simulated whenever a DD method is requested")
            }
        };
        results.push(match outcome {
            Ok(o) => MethodResult {
                method,
                metrics: Some(MethodMetrics::from(&o)),
                error: None,
            },
            Err(e) if e.is_dsp_failure() => MethodResult {
                method,
                metrics: None,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        });
    }
    Ok(TrialMetrics {
        added_skew_s: tx.added_skew_s,
        prbs_seed: tx.prbs_seed,
        noise_seed: setup.det.rng_seed,
        results,
    })
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept_s: f64,
    pub max_abs_residual_s: f64,
    pub n_points: usize,
}

pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept_s = my - slope * mx;
    let max_abs_residual_s = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept_s).abs())
        .fold(0.0, f64::max);
    Some(LineFit {
        slope,
        intercept_s,
        max_abs_residual_s,
        n_points: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFit {
    pub method: Method,
    pub fit: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub methods: Vec<Method>,
    /// Sorted by added skew.
    pub rows: Vec<TrialMetrics>,
    /// Estimate versus added skew, over the rows where the method succeeded.
    pub fits: Vec<MethodFit>,
}

impl SweepResult {
    pub fn fit(&self, method: Method) -> Option<&LineFit> {
        self.fits
            .iter()
            .find(|f| f.method == method)
            .and_then(|f| f.fit.as_ref())
    }

    /// Added skew of the row with the lowest skew-blind EVM for `method`.
    pub fn evm_minimum_s(&self, method: Method) -> Option<f64> {
        self.argmin(method, |m| m.evm_blind_pct)
    }

    /// Added skew of the row with the lowest skew-blind BER for `method`.
    pub fn ber_minimum_s(&self, method: Method) -> Option<f64> {
        self.argmin(method, |m| m.ber_blind)
    }

    fn argmin(&self, method: Method, key: impl Fn(&MethodMetrics) -> f64) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.get(method).map(|m| (r.added_skew_s, key(m))))
            .fold(None, |best: Option<(f64, f64)>, p| match best {
                Some(b) if b.1 <= p.1 => Some(b),
                _ => Some(p),
            })
            .map(|b| b.0)
    }

    /// Spread (max minus min) of the skew-blind EVM across the sweep.
    pub fn evm_range_pct(&self, method: Method) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter_map(|r| r.get(method).map(|m| m.evm_blind_pct))
            .collect();
        if v.is_empty() {
            return None;
        }
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max - min)
    }

    pub fn table(&self) -> Table {
        let mut header = vec!["added_skew_ps".to_string()];
        for m in &self.methods {
            let m = m.as_str();
            header.extend([
                format!("est_skew_{m}_ps"),
                format!("evm_{m}_pct"),
                format!("evm_blind_{m}_pct"),
                format!("ber_{m}"),
                format!("ber_blind_{m}"),
                format!("foe_{m}_ghz"),
                format!("error_{m}"),
            ]);
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![num(r.added_skew_s * 1e12)];
                for &m in &self.methods {
                    row.extend(method_cells(r, m));
                }
                row
            })
            .collect();
        Table { header, rows }
    }
}

fn method_cells(r: &TrialMetrics, m: Method) -> Vec<String> {
    let res = r.results.iter().find(|x| x.method == m);
    match res.and_then(|x| x.metrics.as_ref()) {
        Some(x) => vec![
            num(x.skew_s * 1e12),
            num(x.evm_pct),
            num(x.evm_blind_pct),
            num(x.ber),
            num(x.ber_blind),
            num(x.foe_hz * 1e-9),
            String::new(),
        ],
        None => {
            let mut v = vec![String::new(); 6];
            v.push(res.and_then(|x| x.error.clone()).unwrap_or_default());
            v
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// A rectangular text table with a header row, ready for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// One trial per added skew, all sharing the frame and noise seeds of `setup`
/// so that rows differ only in the skew.
pub fn run_sweep(setup: &Setup, skews_s: &[f64]) -> Result<SweepResult> {
    if skews_s.is_empty() {
        return Err(Error::InvalidParameter("skew list is empty".into()));
    }
    setup.validate()?;
    let mut sorted = skews_s.to_vec();
    if sorted.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("skews must be finite".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let rows = sorted
        .par_iter()
        .map(|&s| {
            let mut st = setup.clone();
            st.tx.added_skew_s = s;
            run_trial(&st)
        })
        .collect::<Result<Vec<_>>>()?;
    let fits = setup
        .methods
        .iter()
        .map(|&method| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.get(method).map(|m| (r.added_skew_s, m.skew_s)))
                .collect();
            MethodFit {
                method,
                fit: fit_line(&pts),
            }
        })
        .collect();
    Ok(SweepResult {
        methods: setup.methods.clone(),
        rows,
        fits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges_s: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub method: Method,
    pub n: usize,
    pub mean_s: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev_s: f64,
    pub min_s: f64,
    pub max_s: f64,
    pub histogram: Histogram,
}

impl McSummary {
    pub fn from_samples(method: Method, samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n == 0 {
            return None;
        }
        let mean_s = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean_s).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let min_s = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max_s = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max_s - min_s) / HISTOGRAM_BINS as f64;
        let (bin_edges_s, counts) = if width > 0.0 {
            let edges = (0..=HISTOGRAM_BINS)
                .map(|i| min_s + width * i as f64)
                .collect();
            let mut counts = vec![0; HISTOGRAM_BINS];
            for v in samples {
                let b = (((v - min_s) / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[b] += 1;
            }
            (edges, counts)
        } else {
            (vec![min_s, max_s], vec![n])
        };
        Some(Self {
            method,
            n,
            mean_s,
            stddev_s: var.sqrt(),
            min_s: min_s.min(mean_s),
            max_s: max_s.max(mean_s),
            histogram: Histogram {
                bin_edges_s,
                counts,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub summaries: Vec<McSummary>,
    pub trials: Vec<TrialMetrics>,
    pub failed_trials: usize,
    /// Non-fatal notes about the run conditions.
    pub warnings: Vec<String>,
}

impl McResult {
    pub fn summary(&self, method: Method) -> Option<&McSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn table(&self) -> Table {
        let methods: Vec<Method> = self.summaries.iter().map(|s| s.method).collect();
        let mut header = vec![
            "trial".to_string(),
            "prbs_seed".to_string(),
            "noise_seed".to_string(),
        ];
        for m in &methods {
            header.push(format!("est_skew_{}_ps", m.as_str()));
            header.push(format!("evm_{}_pct", m.as_str()));
            header.push(format!("error_{}", m.as_str()));
        }
        let rows = self
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut row = vec![
                    i.to_string(),
                    t.prbs_seed.to_string(),
                    t.noise_seed.to_string(),
                ];
                for &m in &methods {
                    let res = t.results.iter().find(|r| r.method == m);
                    match res.and_then(|r| r.metrics.as_ref()) {
                        Some(x) => {
                            row.extend([num(x.skew_s * 1e12), num(x.evm_pct), String::new()])
                        }
                        None => row.extend([
                            String::new(),
                            String::new(),
                            res.and_then(|r| r.error.clone()).unwrap_or_default(),
                        ]),
                    }
                }
                row
            })
            .collect();
        Table { header, rows }
    }
}

/// Independent trials at the configured added skew (normally zero), each with
/// its own frame and noise seed derived from `base_seed`.
pub fn run_monte_carlo(setup: &Setup, n_trials: usize, base_seed: u64) -> Result<McResult> {
    if n_trials < 2 {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo needs at least 2 trials, got {n_trials}"
        )));
    }
    setup.validate()?;
    let mut warnings = Vec::new();
    if n_trials < 30 {
        warnings.push(format!(
            "{n_trials} trials is too few for stable statistics (30 or more advised)"
        ));
    }
    if setup.det.snr_db.is_none() {
        warnings.push("detection noise is disabled; spread reflects data patterns only".into());
    }
    let trials = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut st = setup.clone();
            st.tx.prbs_seed = derive_seed(base_seed, 2 * i);
            st.det.rng_seed = derive_seed(base_seed, 2 * i + 1);
            run_trial(&st)
        })
        .collect::<Result<Vec<_>>>()?;
    let failed_trials = trials.iter().filter(|t| t.failed()).count();
    if failed_trials as f64 > MAX_FAILURE_FRACTION * n_trials as f64 {
        return Err(Error::TooManyFailures {
            failed: failed_trials,
            total: n_trials,
        });
    }
    let summaries = setup
        .methods
        .iter()
        .filter_map(|&m| {
            let v: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.get(m).map(|x| x.skew_s))
                .collect();
            McSummary::from_samples(m, &v)
        })
        .collect();
    Ok(McResult {
        summaries,
        trials,
        failed_trials,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsnrRow {
    pub skew_s: f64,
    pub required_snr_db: Option<f64>,
    pub required_osnr_db: Option<f64>,
    pub penalty_db: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsnrCurve {
    pub baud_hz: f64,
    pub target_ber: f64,
    pub reference_bandwidth_hz: f64,
    /// Always 1: a single-polarization stand-in for a dual-polarization link.
    pub polarizations: u32,
    pub baseline_osnr_db: Option<f64>,
    /// Sorted by skew.
    pub rows: Vec<OsnrRow>,
}

impl OsnrCurve {
    pub fn table(&self) -> Table {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        Table {
            header: [
                "skew_ps",
                "required_snr_db",
                "required_osnr_db",
                "penalty_db",
                "note",
            ]
            .map(String::from)
            .to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.skew_s * 1e12),
                        opt(r.required_snr_db),
                        opt(r.required_osnr_db),
                        opt(r.penalty_db),
                        r.note.clone().unwrap_or_default(),
                    ]
                })
                .collect(),
        }
    }
}

/// Search range of the required-SNR bisection, Es/N0 in dB.
const SNR_SEARCH_DB: (f64, f64) = (0.0, 40.0);
const BISECTION_STEPS: usize = 40;

struct LoadedChannel {
    fit: NoiseLoadedFit,
    clean: Vec<Complex64>,
    noise: Vec<Complex64>,
    frame: crate::txsim::SymbolFrame,
}

impl LoadedChannel {
    /// Ideal coherent path: the clean field and a unit Es/N0 noise realization
    /// go through the same matched filter and alignment separately.
    fn new(tx: &TxConfig, rx: &RxConfig, noise_seed: u64) -> Result<Self> {
        let (frame, field) = transmit(tx)?;
        let sps = field.sample_rate_hz() / tx.baud_hz;
        let g = Normal::new(0.0, (0.5 * field.power() * sps).sqrt())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let noise: Vec<Complex64> = (0..field.len())
            .map(|_| Complex64::new(g.sample(&mut rng), g.sample(&mut rng)))
            .collect();
        let noise = ComplexSignal::new(noise, field.sample_rate_hz())?;
        let clean = matched_filter_2sps(&field, tx.baud_hz, tx.rolloff, rx.rrc_span_symbols)?;
        let noise = matched_filter_2sps(&noise, tx.baud_hz, tx.rolloff, rx.rrc_span_symbols)?;
        let sync = synchronize(&clean, &frame)?;
        let n = noise.len();
        let shift = sync.lag_samples.rem_euclid(n as i64) as usize;
        let derotate = Complex64::new(0.0, -1.0).powu(sync.rotation as u32);
        let noise: Vec<Complex64> = (0..2 * frame.len())
            .map(|i| noise.samples()[(i + shift) % n] * derotate)
            .collect();
        let noise_sig = ComplexSignal::new(noise.clone(), clean.sample_rate_hz())?;
        let fit = NoiseLoadedFit::new(&sync.aligned, &noise_sig, &frame, rx.n_taps)?;
        Ok(Self {
            fit,
            clean: sync.aligned.into_samples(),
            noise,
            frame,
        })
    }

    /// Skew-blind BER at the given Es/N0.
    fn ber(&self, snr_db: f64) -> Result<f64> {
        let sigma = 10f64.powf(-snr_db / 20.0);
        let eq = self.fit.fit(sigma)?;
        let k = self.frame.len();
        let y_clean = eq.apply(&self.clean, k);
        let y_noise = eq.apply(&self.noise, k);
        let var = y_noise.iter().map(|v| v.norm_sqr()).sum::<f64>() / k as f64 * sigma * sigma;
        ber_semi_analytic(&y_clean, &self.frame, (0.5 * var).sqrt())
    }

    fn required_snr_db(&self, target_ber: f64) -> Result<Option<f64>> {
        let (mut lo, mut hi) = SNR_SEARCH_DB;
        if !(self.ber(lo)? > target_ber && self.ber(hi)? < target_ber) {
            return Ok(None);
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.ber(mid)? > target_ber {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}

/// Required-OSNR penalty versus skew on the ideal coherent path, with a
/// strictly-linear equalizer that cannot undo the skew.
///
/// For each skew the SNR (Es/N0) reaching `target_ber` is found by bisection,
/// with the equalizer refitted at every noise level; the BER is evaluated
/// semi-analytically from the noise-free equalizer output and the measured
/// output noise variance. `OSNR = SNR + 10 log10(baud / 12.5 GHz)`.
pub fn run_osnr_penalty(
    tx: &TxConfig,
    rx: &RxConfig,
    skews_s: &[f64],
    target_ber: f64,
    noise_seed: u64,
) -> Result<OsnrCurve> {
    if skews_s.is_empty() {
        return Err(Error::InvalidParameter("skew list is empty".into()));
    }
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "target BER must be in (0, 0.5), got {target_ber}"
        )));
    }
    if skews_s.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("skews must be finite".into()));
    }
    tx.validate()?;
    let v = rx.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let mut sorted = skews_s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let offset_db = 10.0 * (tx.baud_hz / OSNR_REFERENCE_BANDWIDTH_HZ).log10();
    let required = |s: f64| -> Result<Option<f64>> {
        let mut t = tx.clone();
        t.added_skew_s = s;
        LoadedChannel::new(&t, rx, noise_seed)?.required_snr_db(target_ber)
    };
    let baseline = required(0.0)?;
    let snrs = sorted
        .par_iter()
        .map(|&s| required(s))
        .collect::<Result<Vec<_>>>()?;
    let rows = sorted
        .iter()
        .zip(snrs)
        .map(|(&skew_s, snr)| {
            let note = match (snr, baseline) {
                (None, _) => Some("target BER not bracketed".to_string()),
                (Some(_), None) => Some("baseline target BER not bracketed".to_string()),
                _ => None,
            };
            OsnrRow {
                skew_s,
                required_snr_db: snr,
                required_osnr_db: snr.map(|v| v + offset_db),
                penalty_db: snr.zip(baseline).map(|(v, b)| v - b),
                note,
            }
        })
        .collect();
    Ok(OsnrCurve {
        baud_hz: tx.baud_hz,
        target_ber,
        reference_bandwidth_hz: OSNR_REFERENCE_BANDWIDTH_HZ,
        polarizations: 1,
        baseline_osnr_db: baseline.map(|b| b + offset_db),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 - 3.0)).collect();
        let f = fit_line(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept_s + 3.0).abs() < 1e-12);
        assert!(f.max_abs_residual_s < 1e-12);
        assert!(fit_line(&pts[..1]).is_none());
    }

    #[test]
    fn summary_statistics() {
        let s = McSummary::from_samples(Method::Kk, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.n, 4);
        assert!((s.mean_s - 2.5).abs() < 1e-15);
        assert!((s.stddev_s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.histogram.counts.iter().sum::<usize>(), 4);
        assert_eq!(s.histogram.bin_edges_s.len(), HISTOGRAM_BINS + 1);
        let flat = McSummary::from_samples(Method::Kk, &[1.0; 5]).unwrap();
        assert_eq!(flat.histogram.counts, vec![5]);
        assert!(McSummary::from_samples(Method::Kk, &[]).is_none());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let v: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(v.len(), 1000);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn empty_inputs_rejected() {
        let setup = Setup::new(TxConfig::default(), DetConfig::noiseless());
        assert!(run_sweep(&setup, &[]).is_err());
        assert!(
            run_osnr_penalty(&TxConfig::default(), &RxConfig::default(), &[], 1e-2, 1).is_err()
        );
        assert!(run_monte_carlo(&setup, 1, 1).is_err());
    }
}
