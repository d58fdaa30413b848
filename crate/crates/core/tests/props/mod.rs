//! Randomized invariant checks shared by the property tests and the acceptance
//! harness. Each check runs a deterministic proptest runner for `cases` cases.

#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skewcal::channel::DetConfig;
use skewcal::fieldrec::{estimate_foe, reconstruct_hilbert, FieldRecParams, Method};
use skewcal::pipeline::simulate_capture;
use skewcal::rxdsp::{ber, evm, gray_ber_closed_form, receive, RxConfig};
use skewcal::txsim::{
    drive_waveforms, generate_symbols, modulate, transmit, SymbolFrame, TxConfig,
};
use skewcal::waveform::{
    fft_forward, fractional_delay, frequency_shift, group_delay, hilbert_analytic, resample,
    rrc_taps, signed_bin, ComplexSignal, RealSignal,
};
use std::sync::OnceLock;

pub type Check = fn(u32) -> Result<(), String>;

/// Every check, by name.
pub const ALL: [(&str, Check); 12] = [
    (
        "hilbert real part and negative bins",
        hilbert_analytic_signal,
    ),
    ("fractional delay composition", fractional_delay_composes),
    ("frequency shift preserves power", frequency_shift_power),
    (
        "group delay tracks injected delay",
        group_delay_tracks_delay,
    ),
    ("resample round trip", resample_round_trip),
    ("transmitter skews compose", transmitter_skews_compose),
    (
        "skew estimate scale and phase invariance",
        estimate_scale_phase_invariance,
    ),
    ("FOE error bound", foe_error_bound),
    ("EVM tracks SNR", evm_snr_identity),
    (
        "Gray 16QAM BER matches closed form",
        ber_matches_closed_form,
    ),
    (
        "reconstruction scale invariance",
        reconstruction_scale_invariance,
    ),
    ("summary statistics ordering", summary_ordering),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn ok<T>(r: skewcal::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn rms_diff_c(a: &[Complex64], b: &[Complex64]) -> f64 {
    (a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        / a.len() as f64)
        .sqrt()
}

/// Random complex record confined to the lowest `keep` of the spectrum.
fn band_limited(seed: u64, n: usize, keep: f64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Normal::new(0.0, 1.0).unwrap();
    let mut spec: Vec<Complex64> = (0..n)
        .map(|k| {
            if (signed_bin(k, n).unsigned_abs() as f64) < keep * n as f64 / 2.0 {
                Complex64::new(g.sample(&mut rng), g.sample(&mut rng))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    skewcal::waveform::fft_inverse(&mut spec);
    spec
}

pub fn hilbert_analytic_signal(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(-1.0f64..1.0, 4..600), |x| {
        let sig = ok(RealSignal::new(x.clone(), 1e9))?;
        let a = ok(hilbert_analytic(&sig))?;
        for (v, r) in a.samples().iter().zip(&x) {
            prop_assert!((v.re - r).abs() <= 1e-9);
        }
        let n = x.len();
        let mut spec = a.samples().to_vec();
        fft_forward(&mut spec);
        let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (k, v) in spec.iter().enumerate() {
            let b = signed_bin(k, n);
            if b < 0 && !(n % 2 == 0 && k == n / 2) {
                prop_assert!(v.norm() <= 1e-12 * peak, "bin {b}: {}", v.norm());
            }
        }
        Ok(())
    })
}

pub fn fractional_delay_composes(cases: u32) -> Result<(), String> {
    let strategy = (
        any::<u64>(),
        32usize..400,
        -3.0f64..3.0,
        -3.0f64..3.0,
        any::<bool>(),
    );
    run(cases, strategy, |(seed, n, t1, t2, real)| {
        let fs = 1e9;
        let x = band_limited(seed, n, 1.0);
        let (t1, t2) = (t1 / fs, t2 / fs);
        if real {
            let re: Vec<f64> = x.iter().map(|v| v.re).collect();
            let s = ok(RealSignal::new(re, fs))?;
            let two = ok(fractional_delay(&ok(fractional_delay(&s, t1))?, t2))?;
            let one = ok(fractional_delay(&s, t1 + t2))?;
            prop_assert!(rms_diff(two.samples(), one.samples()) <= 1e-10);
        } else {
            let s = ok(ComplexSignal::new(x, fs))?;
            let two = ok(fractional_delay(&ok(fractional_delay(&s, t1))?, t2))?;
            let one = ok(fractional_delay(&s, t1 + t2))?;
            prop_assert!(rms_diff_c(two.samples(), one.samples()) <= 1e-10);
        }
        Ok(())
    })
}

pub fn frequency_shift_power(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 4usize..2000, -0.5f64..0.5),
        |(seed, n, f)| {
            let fs = 80e9;
            let s = ok(ComplexSignal::new(band_limited(seed, n, 1.0), fs))?;
            let p = frequency_shift(&s, f * fs).power();
            prop_assert!((p / s.power() - 1.0).abs() <= 1e-12);
            Ok(())
        },
    )
}

pub fn group_delay_tracks_delay(cases: u32) -> Result<(), String> {
    let strategy = (0.2f64..0.6, 3usize..6, -2.0f64..2.0, 0.05f64..=0.4);
    run(cases, strategy, |(rolloff, sps, tau, bf)| {
        let rate = 1e9;
        let taps = ok(rrc_taps(rolloff, 16, sps))?;
        let delayed = ok(fractional_delay(
            &ok(RealSignal::new(taps.clone(), rate))?,
            tau / rate,
        ))?;
        let g0 = ok(group_delay(&taps, rate, bf))?;
        let g1 = ok(group_delay(delayed.samples(), rate, bf))?;
        prop_assert!(
            ((g1 - g0) * rate - tau).abs() <= 0.01,
            "{} vs {tau}",
            (g1 - g0) * rate
        );
        Ok(())
    })
}

pub fn resample_round_trip(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 16usize..500, 1.1f64..4.0),
        |(seed, n, up)| {
            let fs = 10e9;
            let x = ok(ComplexSignal::new(band_limited(seed, n, 0.8), fs))?;
            let hi = ok(resample(&x, fs * up))?;
            let back = ok(resample(&hi, fs))?;
            prop_assert_eq!(back.len(), n);
            prop_assert!(rms_diff_c(back.samples(), x.samples()) <= 1e-9);
            Ok(())
        },
    )
}

pub fn transmitter_skews_compose(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), -7.0f64..7.0, -7.0f64..7.0),
        |(seed, a, b)| {
            let base = TxConfig {
                n_symbols: 4096,
                prbs_seed: seed,
                ..TxConfig::default()
            };
            let split = TxConfig {
                added_skew_s: a * 1e-12,
                intrinsic_skew_s: b * 1e-12,
                ..base.clone()
            };
            let single = TxConfig {
                added_skew_s: (a + b) * 1e-12,
                intrinsic_skew_s: 0.0,
                ..base
            };
            let frame = ok(generate_symbols(&split))?;
            let (i, q) = ok(drive_waveforms(&frame, &split))?;
            let a = ok(modulate(&i, &q, &split))?.field;
            let (i, q) = ok(drive_waveforms(&frame, &single))?;
            let b = ok(modulate(&i, &q, &single))?.field;
            prop_assert!(rms_diff_c(a.samples(), b.samples()) <= 1e-10);
            Ok(())
        },
    )
}

struct Reference {
    frame: SymbolFrame,
    field: ComplexSignal,
    foe_hz: f64,
    skew_s: f64,
}

fn reference_capture() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let tx = TxConfig {
            n_symbols: 4096,
            ..TxConfig::default()
        };
        let det = DetConfig::default_noise();
        let cap = simulate_capture(&tx, &det).expect("reference capture");
        let params = FieldRecParams::new(det.tone_offset_hz, tx.baud_hz, tx.rolloff);
        let rec = reconstruct_hilbert(&cap.current, &params).expect("reconstruction");
        let out = receive(
            &rec.field,
            &cap.frame,
            &RxConfig::default(),
            tx.baud_hz,
            tx.rolloff,
            Method::Hilbert,
            rec.foe_hz,
        )
        .expect("reference receive");
        Reference {
            frame: cap.frame,
            field: rec.field,
            foe_hz: rec.foe_hz,
            skew_s: out.estimate.skew_s,
        }
    })
}

pub fn estimate_scale_phase_invariance(cases: u32) -> Result<(), String> {
    let r = reference_capture();
    let tx = TxConfig::default();
    run(cases, (-20.0f64..20.0, -3.2f64..3.2), |(gain_db, theta)| {
        let g = Complex64::from_polar(10f64.powf(gain_db / 20.0), theta);
        let out = ok(receive(
            &r.field.scaled(g),
            &r.frame,
            &RxConfig::default(),
            tx.baud_hz,
            tx.rolloff,
            Method::Hilbert,
            r.foe_hz,
        ))?;
        let d = (out.estimate.skew_s - r.skew_s).abs();
        prop_assert!(d <= 0.005e-12, "changed by {} ps", d * 1e12);
        Ok(())
    })
}

pub fn foe_error_bound(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 15e9f64..25e9, -3e9f64..3e9),
        |(seed, f0, coarse_err)| {
            let tx = TxConfig {
                n_symbols: 4096,
                prbs_seed: seed,
                ..TxConfig::default()
            };
            let (_, field) = ok(transmit(&tx))?;
            let x = frequency_shift(&field, -f0);
            let est = ok(estimate_foe(&x, f0 + coarse_err, tx.baud_hz))?;
            prop_assert!(
                (est - f0).abs() <= tx.baud_hz * 5e-4,
                "{} MHz off",
                (est - f0) * 1e-6
            );
            Ok(())
        },
    )
}

fn noisy_symbols(frame: &SymbolFrame, es_n0_db: f64, seed: u64) -> Vec<Complex64> {
    let sigma = (0.5 * 10f64.powf(-es_n0_db / 10.0)).sqrt();
    let g = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    frame
        .symbols
        .iter()
        .map(|s| s + Complex64::new(g.sample(&mut rng), g.sample(&mut rng)))
        .collect()
}

pub fn evm_snr_identity(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 10.0f64..30.0), |(seed, snr)| {
        let tx = TxConfig {
            n_symbols: 1 << 16,
            prbs_seed: seed,
            ..TxConfig::default()
        };
        let frame = ok(generate_symbols(&tx))?;
        let y = noisy_symbols(&frame, snr, seed ^ 0x5A5A);
        let e = ok(evm(&y, &frame))?;
        let expected = 100.0 * 10f64.powf(-snr / 20.0);
        prop_assert!((e - expected).abs() <= 0.3, "{e} vs {expected}");
        Ok(())
    })
}

pub fn ber_matches_closed_form(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 9.0f64..15.0), |(seed, snr)| {
        let tx = TxConfig {
            n_symbols: 1 << 16,
            prbs_seed: seed,
            ..TxConfig::default()
        };
        let frame = ok(generate_symbols(&tx))?;
        let y = noisy_symbols(&frame, snr, seed ^ 0xA5A5);
        let measured = ok(ber(&y, &frame))?;
        let expected = ok(gray_ber_closed_form(16, snr))?;
        let ratio = measured / expected;
        prop_assert!(
            (1.0 / 1.3..=1.3).contains(&ratio),
            "{measured} vs {expected}"
        );
        Ok(())
    })
}

pub fn reconstruction_scale_invariance(cases: u32) -> Result<(), String> {
    static CAPTURE: OnceLock<(RealSignal, FieldRecParams)> = OnceLock::new();
    let (current, params) = CAPTURE.get_or_init(|| {
        let tx = TxConfig {
            n_symbols: 4096,
            ..TxConfig::default()
        };
        let det = DetConfig::noiseless();
        let cap = simulate_capture(&tx, &det).expect("capture");
        (
            cap.current,
            FieldRecParams::new(det.tone_offset_hz, tx.baud_hz, tx.rolloff),
        )
    });
    let base_h = reconstruct_hilbert(current, params).map_err(|e| e.to_string())?;
    let base_k = skewcal::fieldrec::reconstruct_kk(current, params).map_err(|e| e.to_string())?;
    run(cases, 0.01f64..100.0, |gain| {
        let scaled = ok(RealSignal::new(
            current.samples().iter().map(|v| v * gain).collect(),
            current.sample_rate_hz(),
        ))?;
        let h = ok(reconstruct_hilbert(&scaled, params))?;
        let k = ok(skewcal::fieldrec::reconstruct_kk(&scaled, params))?;
        prop_assert!(rms_diff_c(h.field.samples(), base_h.field.samples()) <= 1e-9);
        prop_assert!(rms_diff_c(k.field.samples(), base_k.field.samples()) <= 1e-9);
        Ok(())
    })
}

pub fn summary_ordering(cases: u32) -> Result<(), String> {
    run(
        cases,
        prop::collection::vec(-1e-11f64..1e-11, 1..400),
        |v| {
            let s = skewcal::experiments::McSummary::from_samples(Method::Hilbert, &v)
                .ok_or_else(|| TestCaseError::fail("no summary"))?;
            prop_assert_eq!(s.n, s.histogram.counts.iter().sum::<usize>());
            prop_assert!(s.min_s <= s.mean_s && s.mean_s <= s.max_s);
            prop_assert!(s.stddev_s >= 0.0);
            Ok(())
        },
    )
}
