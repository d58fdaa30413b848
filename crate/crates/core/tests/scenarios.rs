//! End-to-end behaviour of the receiver chain on simulated captures.

use num_complex::Complex64;
use skewcal::channel::{detect, DetConfig};
use skewcal::cohd::calibrate_coherent;
use skewcal::experiments::{run_monte_carlo, run_sweep, Setup};
use skewcal::fieldrec::{
    estimate_foe, reconstruct_hilbert, reconstruct_kk, FieldRecParams, Method,
};
use skewcal::pipeline::{calibrate_capture, simulate_capture, Capture};
use skewcal::rxdsp::{
    carrier_recover, estimate_skew, matched_filter_2sps, synchronize, wiener_equalize,
    EqualizerSolution, RxConfig, RxOutcome,
};
use skewcal::txsim::{transmit, TxConfig};
use skewcal::waveform::{brickwall_lowpass, frequency_shift, resample_real, RealSignal};
use skewcal::Error;

const PS: f64 = 1e-12;

fn tx(n_symbols: usize, added_ps: f64, intrinsic_ps: f64) -> TxConfig {
    TxConfig {
        n_symbols,
        added_skew_s: added_ps * PS,
        intrinsic_skew_s: intrinsic_ps * PS,
        ..TxConfig::default()
    }
}

fn params(tx: &TxConfig, det: &DetConfig) -> FieldRecParams {
    FieldRecParams::new(det.tone_offset_hz, tx.baud_hz, tx.rolloff)
}

fn dd(cap: &Capture, tx: &TxConfig, det: &DetConfig, method: Method) -> RxOutcome {
    calibrate_capture(
        &cap.current,
        &cap.frame,
        &params(tx, det),
        &RxConfig::default(),
        method,
    )
    .unwrap()
}

fn coherent(cap: &Capture, tx: &TxConfig, lo_hz: f64, snr_db: Option<f64>) -> RxOutcome {
    calibrate_coherent(
        &cap.field,
        &cap.frame,
        &RxConfig::default(),
        tx.baud_hz,
        tx.rolloff,
        lo_hz,
        snr_db,
        3,
    )
    .unwrap()
}

#[test]
fn noiseless_zero_skew_loopback_evm() {
    let t = tx(8192, 0.0, 0.0);
    let strong = DetConfig {
        cspr_db: 25.0,
        ..DetConfig::noiseless()
    };
    let cap = simulate_capture(&t, &strong).unwrap();
    let h = dd(&cap, &t, &strong, Method::Hilbert);
    assert!(h.estimate.evm_pct <= 3.0, "{}", h.estimate.evm_pct);

    // Regression floors at the default tone power, set by uncancelled
    // signal-signal beating.
    let det = DetConfig::noiseless();
    let cap = simulate_capture(&t, &det).unwrap();
    let h = dd(&cap, &t, &det, Method::Hilbert).estimate.evm_pct;
    let k = dd(&cap, &t, &det, Method::Kk).estimate.evm_pct;
    assert!((h - 9.03).abs() <= 0.3, "{h}");
    assert!((k - 1.93).abs() <= 0.3, "{k}");
}

#[test]
fn tone_only_current_has_no_signal_line() {
    let current = RealSignal::new(vec![4.2; 8192], 272e9).unwrap();
    let p = FieldRecParams::new(21e9, 34e9, 0.2);
    assert!(matches!(
        reconstruct_hilbert(&current, &p),
        Err(Error::NoDominantLine { .. })
    ));
}

#[test]
fn skewed_dd_constellation_matches_coherent() {
    let t = tx(8192, 3.0, 0.0);
    // The constellations converge once beat interference is small: kk from
    // 20 dB tone power, hilbert (no cancellation at all) from 35 dB.
    for (m, cspr_db) in [
        (Method::Kk, 20.0),
        (Method::Hilbert, 35.0),
        (Method::Hilbert, 13.5),
        (Method::Kk, 13.5),
    ] {
        let det = DetConfig {
            cspr_db,
            ..DetConfig::noiseless()
        };
        let cap = simulate_capture(&t, &det).unwrap();
        let c = coherent(&cap, &t, 0.0, None);
        let d = dd(&cap, &t, &det, m);
        if cspr_db > 13.5 {
            assert!(
                (d.estimate.evm_pct - c.estimate.evm_pct).abs() <= 1.0,
                "{m}"
            );
        }
        assert!(
            (d.estimate.skew_s - c.estimate.skew_s).abs() <= 0.1 * PS,
            "{m}"
        );
    }
}

#[test]
fn hilbert_and_kk_agree_on_one_capture() {
    let t = tx(1 << 15, 5.0, -3.0);
    let det = DetConfig::default_noise();
    let cap = simulate_capture(&t, &det).unwrap();
    let h = dd(&cap, &t, &det, Method::Hilbert);
    let k = dd(&cap, &t, &det, Method::Kk);
    assert!((h.estimate.skew_s - k.estimate.skew_s).abs() <= 0.05 * PS);
}

#[test]
fn coherent_estimate_survives_lo_offset() {
    let t = tx(8192, 3.0, 0.0);
    let cap = simulate_capture(&t, &DetConfig::noiseless()).unwrap();
    let a = coherent(&cap, &t, 0.0, Some(25.0));
    let b = coherent(&cap, &t, 100e6, Some(25.0));
    assert!((a.estimate.skew_s - b.estimate.skew_s).abs() <= 0.05 * PS);
    assert!((b.estimate.foe_hz + 100e6).abs() <= t.baud_hz * 1e-4);
}

/// Reconstruction error against the true field, after the best complex gain.
fn reconstruction_error_db(cspr_db: f64) -> f64 {
    let t = tx(4096, 0.0, 0.0);
    let det = DetConfig {
        cspr_db,
        pd_bandwidth_hz: 1e13,
        adc_rate_hz: t.dac_rate_hz(),
        ..DetConfig::noiseless()
    };
    let (_, field) = transmit(&t).unwrap();
    let current = detect(&field, &det, t.band_edge_hz()).unwrap();
    let p = params(&t, &det);
    let rec = reconstruct_hilbert(&current, &p).unwrap();
    // Undo the residual offset left by the estimate; the true line sits at
    // minus the tone offset.
    let rec = frequency_shift(&rec.field, -det.tone_offset_hz - rec.foe_hz);
    let truth = brickwall_lowpass(&field, p.lowpass_cutoff_hz()).unwrap();
    let (r, d) = (rec.samples(), truth.samples());
    let cross: Complex64 = r.iter().zip(d).map(|(a, b)| a * b.conj()).sum();
    let dd: f64 = d.iter().map(|v| v.norm_sqr()).sum();
    let g = cross / dd;
    let err: f64 = r.iter().zip(d).map(|(a, b)| (a - g * b).norm_sqr()).sum();
    let total: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    10.0 * (err / total).log10()
}

#[test]
fn beat_interference_falls_with_cspr() {
    let errs: Vec<f64> = [10.0, 15.0, 20.0, 25.0]
        .iter()
        .map(|&c| reconstruction_error_db(c))
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    assert!(errs[2] <= -25.0, "{errs:?}");
}

#[test]
fn foe_error_shrinks_with_record_length() {
    let rms = |n_symbols: usize| {
        let sq: f64 = (0..20u64)
            .map(|seed| {
                let t = TxConfig {
                    n_symbols,
                    prbs_seed: seed,
                    intrinsic_skew_s: 0.0,
                    ..TxConfig::default()
                };
                let (_, field) = transmit(&t).unwrap();
                let f0 = 20e9 + 1.37e6 * seed as f64;
                let x = frequency_shift(&field, -f0);
                (estimate_foe(&x, 20e9, t.baud_hz).unwrap() - f0).powi(2)
            })
            .sum();
        (sq / 20.0).sqrt()
    };
    let (short, long) = (rms(4096), rms(16384));
    assert!(long <= 0.5 * short, "{short} -> {long}");
}

#[test]
fn sync_succeeds_at_default_noise() {
    let mut s = Setup::new(tx(4096, 0.0, -3.0), DetConfig::default_noise());
    s.methods = vec![Method::Hilbert];
    let r = run_monte_carlo(&s, 100, 11).unwrap();
    assert_eq!(r.failed_trials, 0);
    assert_eq!(r.summary(Method::Hilbert).unwrap().n, 100);
}

#[test]
fn residual_frequency_offset_is_tracked() {
    let t = tx(8192, 0.0, 0.0);
    let cap = simulate_capture(&t, &DetConfig::noiseless()).unwrap();
    let rx = RxConfig::default();
    let evm_at = |lo_hz: f64| {
        let rf =
            skewcal::cohd::coherent_receive(&cap.field, lo_hz, t.baud_hz, Some(20.0), 5).unwrap();
        let two = matched_filter_2sps(&rf, t.baud_hz, t.rolloff, rx.rrc_span_symbols).unwrap();
        let sync = synchronize(&two, &cap.frame).unwrap();
        let cr = carrier_recover(&sync.aligned, &cap.frame, rx.cr_block_len).unwrap();
        let (_, y) = wiener_equalize(&cr, &cap.frame, rx.n_taps).unwrap();
        skewcal::rxdsp::evm(&y, &cap.frame).unwrap()
    };
    let (still, ramp) = (evm_at(0.0), evm_at(1e6));
    assert!((ramp - still).abs() <= 0.5, "{still} vs {ramp}");
}

#[test]
fn quadrature_error_is_absorbed() {
    let t = TxConfig {
        quad_phase_err_rad: 5f64.to_radians(),
        ..tx(8192, 0.0, 0.0)
    };
    let cap = simulate_capture(&t, &DetConfig::noiseless()).unwrap();
    let c = coherent(&cap, &t, 0.0, None);
    assert!(c.estimate.evm_pct <= 1.0, "{}", c.estimate.evm_pct);
    let cross: f64 = c
        .solution
        .taps_iq
        .iter()
        .chain(&c.solution.taps_qi)
        .map(|v| v * v)
        .sum();
    assert!(cross > 1e-4);
}

#[test]
fn identity_solution_reads_zero() {
    let mut impulse = vec![0.0; 65];
    impulse[32] = 1.0;
    let sol = EqualizerSolution {
        taps_ii: impulse.clone(),
        taps_iq: vec![0.0; 65],
        taps_qi: vec![0.0; 65],
        taps_qq: impulse,
        tap_rate_hz: 68e9,
        residual_error: 0.0,
    };
    assert!(estimate_skew(&sol, 0.4).unwrap().abs() <= 1e-15);
}

#[test]
fn one_tap_period_skew() {
    let t = tx(8192, 0.0, 0.0);
    let rx = RxConfig::default();
    let (frame, field) = transmit(&t).unwrap();
    let two = matched_filter_2sps(&field, t.baud_hz, t.rolloff, rx.rrc_span_symbols).unwrap();
    let aligned = synchronize(&two, &frame).unwrap().aligned;
    let s = aligned.samples();
    let n = s.len();
    let delayed: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(s[k].re, s[(k + n - 1) % n].im))
        .collect();
    let delayed = skewcal::waveform::ComplexSignal::new(delayed, aligned.sample_rate_hz()).unwrap();
    let (sol, _) = wiener_equalize(&delayed, &frame, rx.n_taps).unwrap();
    let tap_period = 1.0 / sol.tap_rate_hz;
    let skew = estimate_skew(&sol, rx.band_fraction).unwrap();
    assert!(
        (skew / tap_period - 1.0).abs() <= 0.01,
        "{}",
        skew / tap_period
    );
}

#[test]
fn estimator_is_linear_over_an_eighth_symbol() {
    let t0 = TxConfig::default();
    let eighth = t0.symbol_period_s() / 8.0;
    let pts: Vec<(f64, f64)> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|f| {
            let t = TxConfig {
                added_skew_s: f * eighth,
                ..tx(4096, 0.0, 0.0)
            };
            let det = DetConfig::noiseless();
            let cap = simulate_capture(&t, &det).unwrap();
            (
                t.added_skew_s,
                dd(&cap, &t, &det, Method::Hilbert).estimate.skew_s,
            )
        })
        .collect();
    let fit = skewcal::experiments::fit_line(&pts).unwrap();
    assert!((fit.slope - 1.0).abs() <= 0.02, "{fit:?}");
}

#[test]
fn residual_falls_as_taps_grow() {
    let t = tx(8192, 6.0, 0.0);
    let det = DetConfig::default_noise();
    let cap = simulate_capture(&t, &det).unwrap();
    let p = params(&t, &det);
    let rx = RxConfig::default();
    let current = resample_real(&cap.current, 8.0 * t.baud_hz).unwrap();
    let rec = reconstruct_kk(&current, &p).unwrap();
    let two = matched_filter_2sps(&rec.field, t.baud_hz, t.rolloff, rx.rrc_span_symbols).unwrap();
    let sync = synchronize(&two, &cap.frame).unwrap();
    let cr = carrier_recover(&sync.aligned, &cap.frame, rx.cr_block_len).unwrap();
    let res: Vec<f64> = [17, 33, 49, 65]
        .iter()
        .map(|&n| {
            wiener_equalize(&cr, &cap.frame, n)
                .unwrap()
                .0
                .residual_error
        })
        .collect();
    for w in res.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "{res:?}");
    }
}

#[test]
fn single_point_sweep_without_intrinsic_skew() {
    let s = Setup::new(tx(1 << 15, 0.0, 0.0), DetConfig::noiseless());
    let r = run_sweep(&s, &[0.0]).unwrap();
    for m in [Method::Hilbert, Method::Kk, Method::Cohd] {
        let est = r.rows[0].get(m).unwrap().skew_s;
        assert!(est.abs() <= 0.05 * PS, "{m}: {}", est / PS);
    }
}

#[test]
fn noiseless_monte_carlo_is_repeatable() {
    let s = Setup::new(tx(1 << 15, 0.0, -3.0), DetConfig::noiseless());
    let r = run_monte_carlo(&s, 10, 2).unwrap();
    assert!(!r.warnings.is_empty());
    // Hilbert keeps a data-dependent beat term, so its spread is larger.
    for (m, bound_ps) in [
        (Method::Hilbert, 0.05),
        (Method::Kk, 0.01),
        (Method::Cohd, 0.01),
    ] {
        let sm = r.summary(m).unwrap();
        assert_eq!(sm.n, 10);
        assert!(sm.stddev_s <= bound_ps * PS, "{m}: {}", sm.stddev_s / PS);
    }
}

#[test]
fn monte_carlo_methods_agree_in_mean() {
    let mut s = Setup::new(tx(4096, 0.0, -3.0), DetConfig::default_noise());
    s.methods = vec![Method::Hilbert, Method::Kk];
    let r = run_monte_carlo(&s, 30, 4).unwrap();
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    let (h, k) = (
        r.summary(Method::Hilbert).unwrap(),
        r.summary(Method::Kk).unwrap(),
    );
    assert!((h.mean_s - k.mean_s).abs() <= 0.05 * PS);
    for sm in [h, k] {
        let bound = 2.0 * sm.stddev_s / (sm.n as f64).sqrt();
        // Consistency against the configured skew, with the estimator's
        // small deterministic bias allowed for.
        assert!(
            (sm.mean_s + 3.0 * PS).abs() <= bound + 0.05 * PS,
            "{}",
            sm.mean_s / PS
        );
    }
}
