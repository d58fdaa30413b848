mod capture;
mod config;
mod error;
mod output;

use capture::{read_waveform, write_waveform, Sidecar};
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use error::{CliError, CliResult, Kind};
use output::{version, EstimateRecord, FailureRecord, OutDir};
use serde::Serialize;
use skewcal::cohd::calibrate_coherent;
use skewcal::experiments::{
    run_monte_carlo, run_osnr_penalty, run_sweep, McSummary, OsnrCurve, SweepResult,
};
use skewcal::fieldrec::{FieldRecParams, Method};
use skewcal::pipeline::{calibrate_capture, simulate_capture};
use skewcal::rxdsp::{RxConfig, RxOutcome};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "skewcal", version = env!("CARGO_PKG_VERSION"), about = "Transmitter IQ skew calibration by heterodyne direct detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply to anything it leaves out.
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Comma-separated subset of hilbert,kk,cohd.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Config override in `section.key=value` form; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One end-to-end trial: estimates JSON and recovered constellation CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the photocurrent capture and its sidecar.
        #[arg(long)]
        capture: bool,
    },
    /// Estimate skew from a recorded photocurrent.
    Calibrate {
        waveform: PathBuf,
        sidecar: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "hilbert,kk")]
        methods: Vec<String>,
    },
    /// Estimated versus added skew.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Repeated trials at fixed skew with independent seeds.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Required-OSNR penalty versus skew.
    Osnr {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common, extra: &[String]) -> CliResult<RunConfig> {
    let text = match &common.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::io(&format!("reading {}", p.display()), e))?,
        None => String::new(),
    };
    let mut overrides = common.overrides.clone();
    if let Some(m) = &common.methods {
        let quoted: Vec<String> = m.iter().map(|s| format!("{:?}", s.trim())).collect();
        overrides.push(format!("methods=[{}]", quoted.join(",")));
    }
    overrides.extend_from_slice(extra);
    RunConfig::from_toml(&text, &overrides)
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    version: String,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn artifact<T: Serialize>(config: &RunConfig, body: T) -> Artifact<'_, T> {
    Artifact {
        version: version(),
        config,
        body,
    }
}

#[derive(Serialize)]
struct Estimates {
    estimates: Vec<EstimateRecord>,
    failures: Vec<FailureRecord>,
}

fn collect(
    results: Vec<(Method, skewcal::Result<RxOutcome>)>,
) -> CliResult<(Vec<RxOutcome>, Vec<FailureRecord>)> {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (method, r) in results {
        match r {
            Ok(o) => ok.push(o),
            Err(e) if e.is_dsp_failure() => failed.push(FailureRecord {
                method,
                error: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((ok, failed))
}

fn dsp_failure_exit(failed: &[FailureRecord]) -> CliResult<()> {
    if failed.is_empty() {
        return Ok(());
    }
    let mut e = CliError::new(Kind::Dsp, "DSP failure");
    e.details = failed
        .iter()
        .map(|f| format!("{}: {}", f.method, f.error))
        .collect();
    Err(e)
}

fn constellation_table(
    outcomes: &[RxOutcome],
    frame: &skewcal::txsim::SymbolFrame,
) -> skewcal::experiments::Table {
    let header = ["method", "index", "eq_re", "eq_im", "ref_re", "ref_im"]
        .map(String::from)
        .to_vec();
    let rows = outcomes
        .iter()
        .flat_map(|o| {
            o.equalized
                .iter()
                .zip(&frame.symbols)
                .enumerate()
                .map(move |(i, (y, d))| {
                    vec![
                        o.estimate.method.to_string(),
                        i.to_string(),
                        format!("{}", y.re),
                        format!("{}", y.im),
                        format!("{}", d.re),
                        format!("{}", d.im),
                    ]
                })
        })
        .collect();
    skewcal::experiments::Table { header, rows }
}

fn cmd_simulate(common: &Common, write_capture: bool) -> CliResult<Vec<PathBuf>> {
    let extra: Vec<String> = common
        .seed
        .map(|s| vec![format!("tx.prbs_seed={s}"), format!("det.rng_seed={s}")])
        .unwrap_or_default();
    let cfg = load_config(common, &extra)?;
    let setup = cfg.setup();
    let out = OutDir::create(&common.out_dir)?;
    let cap = simulate_capture(&setup.tx, &setup.det)?;
    let params = FieldRecParams::new(setup.det.tone_offset_hz, setup.tx.baud_hz, setup.tx.rolloff);
    let results = setup
        .methods
        .iter()
        .map(|&m| {
            let r = match m {
                Method::Cohd => calibrate_coherent(
                    &cap.field,
                    &cap.frame,
                    &setup.rx,
                    setup.tx.baud_hz,
                    setup.tx.rolloff,
                    setup.cohd_lo_offset_hz,
                    setup.det.snr_db,
                    setup.cohd_seed(),
                ),
                _ => calibrate_capture(&cap.current, &cap.frame, &params, &setup.rx, m),
            };
            (m, r)
        })
        .collect();
    let (ok, failed) = collect(results)?;
    let mut written = vec![out.write_json(
        "estimate.json",
        &artifact(
            &cfg,
            Estimates {
                estimates: ok.iter().map(EstimateRecord::from).collect(),
                failures: failed.clone(),
            },
        ),
    )?];
    written.push(out.write_csv("constellation.csv", &constellation_table(&ok, &cap.frame))?);
    if write_capture {
        let wf = out.path("capture.f64");
        write_waveform(&wf, cap.current.samples())?;
        written.push(wf);
        let sidecar = Sidecar {
            sample_rate_hz: cap.current.sample_rate_hz(),
            baud_hz: setup.tx.baud_hz,
            tone_offset_hz_coarse: setup.det.tone_offset_hz,
            rolloff: setup.tx.rolloff,
            mod_order: setup.tx.mod_order,
            prbs_seed: setup.tx.prbs_seed,
            n_symbols: Some(setup.tx.n_symbols),
        };
        written.push(out.write_json("capture.json", &sidecar)?);
    }
    dsp_failure_exit(&failed)?;
    Ok(written)
}

#[derive(Serialize)]
struct Calibration<'a> {
    version: String,
    sidecar: &'a Sidecar,
    rx: RxConfig,
    estimates: Vec<EstimateRecord>,
    failures: Vec<FailureRecord>,
}

fn cmd_calibrate(
    waveform: &Path,
    sidecar: &Path,
    out_dir: &Path,
    methods: &[String],
) -> CliResult<Vec<PathBuf>> {
    let methods: Vec<Method> = methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::config("invalid --methods", vec![e.to_string()]))?;
    if methods.contains(&Method::Cohd) {
        return Err(CliError::config(
            "invalid --methods",
            vec!["cohd needs the optical field, not a photocurrent capture".into()],
        ));
    }
    let side = Sidecar::from_path(sidecar)?;
    let current = read_waveform(waveform, side.sample_rate_hz)?;
    let frame = side.frame(current.len())?;
    let rx = RxConfig::default();
    let params = side.params();
    let results = methods
        .iter()
        .map(|&m| (m, calibrate_capture(&current, &frame, &params, &rx, m)))
        .collect();
    let (ok, failed) = collect(results)?;
    let out = OutDir::create(out_dir)?;
    let written = vec![out.write_json(
        "calibration.json",
        &Calibration {
            version: version(),
            sidecar: &side,
            rx,
            estimates: ok.iter().map(EstimateRecord::from).collect(),
            failures: failed.clone(),
        },
    )?];
    dsp_failure_exit(&failed)?;
    Ok(written)
}

fn cmd_sweep(common: &Common) -> CliResult<Vec<PathBuf>> {
    let extra: Vec<String> = common
        .seed
        .map(|s| vec![format!("tx.prbs_seed={s}"), format!("det.rng_seed={s}")])
        .unwrap_or_default();
    let cfg = load_config(common, &extra)?;
    if cfg.sweep.skews_ps.is_empty() {
        return Err(CliError::config("sweep.skews_ps must not be empty", vec![]));
    }
    let skews: Vec<f64> = cfg.sweep.skews_ps.iter().map(|s| s * 1e-12).collect();
    let result: SweepResult = run_sweep(&cfg.setup(), &skews)?;
    let out = OutDir::create(&common.out_dir)?;
    Ok(vec![
        out.write_csv("sweep.csv", &result.table())?,
        out.write_json("sweep.json", &artifact(&cfg, SweepBody { result: &result }))?,
    ])
}

#[derive(Serialize)]
struct SweepBody<'a> {
    result: &'a SweepResult,
}

#[derive(Serialize)]
struct McBody<'a> {
    n_trials: usize,
    failed_trials: usize,
    warnings: &'a [String],
    summaries: &'a [McSummary],
}

fn cmd_montecarlo(common: &Common, n: Option<usize>) -> CliResult<Vec<PathBuf>> {
    let mut extra = Vec::new();
    if let Some(s) = common.seed {
        extra.push(format!("montecarlo.seed={s}"));
    }
    if let Some(n) = n {
        extra.push(format!("montecarlo.n_trials={n}"));
    }
    let cfg = load_config(common, &extra)?;
    let result = run_monte_carlo(&cfg.setup(), cfg.montecarlo.n_trials, cfg.montecarlo.seed)?;
    let out = OutDir::create(&common.out_dir)?;
    Ok(vec![
        out.write_csv("montecarlo.csv", &result.table())?,
        out.write_json(
            "montecarlo.json",
            &artifact(
                &cfg,
                McBody {
                    n_trials: result.trials.len(),
                    failed_trials: result.failed_trials,
                    warnings: &result.warnings,
                    summaries: &result.summaries,
                },
            ),
        )?,
    ])
}

#[derive(Serialize)]
struct OsnrBody<'a> {
    note: &'static str,
    curve: &'a OsnrCurve,
}

fn cmd_osnr(common: &Common) -> CliResult<Vec<PathBuf>> {
    let extra: Vec<String> = common
        .seed
        .map(|s| vec![format!("osnr.noise_seed={s}")])
        .unwrap_or_default();
    let cfg = load_config(common, &extra)?;
    if cfg.osnr.skews_ps.is_empty() {
        return Err(CliError::config("osnr.skews_ps must not be empty", vec![]));
    }
    let skews: Vec<f64> = cfg.osnr.skews_ps.iter().map(|s| s * 1e-12).collect();
    let curve = run_osnr_penalty(
        &cfg.osnr_tx_config(),
        &cfg.rx_config(),
        &skews,
        cfg.osnr.target_ber,
        cfg.osnr.noise_seed,
    )?;
    let out = OutDir::create(&common.out_dir)?;
    Ok(vec![
        out.write_csv("osnr.csv", &curve.table())?,
        out.write_json(
            "osnr.json",
            &artifact(
                &cfg,
                OsnrBody {
                    note: "single polarization; OSNR = SNR + 10 log10(baud / 12.5 GHz)",
                    curve: &curve,
                },
            ),
        )?,
    ])
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Simulate { common, capture } => cmd_simulate(&common, capture),
        Command::Calibrate {
            waveform,
            sidecar,
            out_dir,
            methods,
        } => cmd_calibrate(&waveform, &sidecar, &out_dir, &methods),
        Command::Sweep { common } => cmd_sweep(&common),
        Command::Montecarlo { common, n } => cmd_montecarlo(&common, n),
        Command::Osnr { common } => cmd_osnr(&common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
