//! Run configuration: a TOML document with one table per stage, user-facing
//! units (ps, GHz, MHz, degrees) in the key names.
//!
//! Validation is exhaustive. Unknown keys, type mismatches and physical
//! constraint violations are all collected before anything runs.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use skewcal::channel::DetConfig;
use skewcal::experiments::Setup;
use skewcal::fieldrec::Method;
use skewcal::rxdsp::RxConfig;
use skewcal::txsim::TxConfig;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxSection {
    pub baud_ghz: f64,
    pub mod_order: u32,
    pub rolloff: f64,
    pub sps_dac: usize,
    pub added_skew_ps: f64,
    pub intrinsic_skew_ps: f64,
    pub quad_phase_err_deg: f64,
    pub n_symbols: usize,
    pub prbs_seed: u64,
    pub rrc_span_symbols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetSection {
    pub tone_offset_ghz: f64,
    pub cspr_db: f64,
    pub pd_bandwidth_ghz: f64,
    pub adc_rate_ghz: f64,
    /// 0 disables quantization.
    pub adc_bits: u32,
    /// Adds electrical noise at `snr_db` when true.
    pub noise: bool,
    pub snr_db: f64,
    pub tone_linewidth_mhz: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxSection {
    pub n_taps: usize,
    pub band_fraction: f64,
    pub cr_block_len: usize,
    pub rrc_span_symbols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohdSection {
    pub lo_offset_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub skews_ps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub n_trials: usize,
    pub seed: u64,
}

/// The OSNR run reuses `[tx]` except for the fields below; the skew grid is
/// the total transmitter skew (intrinsic skew is not added).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsnrSection {
    pub baud_ghz: f64,
    pub n_symbols: usize,
    pub skews_ps: Vec<f64>,
    pub target_ber: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub methods: Vec<String>,
    pub tx: TxSection,
    pub det: DetSection,
    pub rx: RxSection,
    pub cohd: CohdSection,
    pub sweep: SweepSection,
    pub montecarlo: MonteCarloSection,
    pub osnr: OsnrSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tx = TxConfig::default();
        let det = DetConfig::default_noise();
        let rx = RxConfig::default();
        Self {
            methods: ["hilbert", "kk", "cohd"].map(String::from).to_vec(),
            tx: TxSection {
                baud_ghz: tx.baud_hz * 1e-9,
                mod_order: tx.mod_order,
                rolloff: tx.rolloff,
                sps_dac: tx.sps_dac,
                added_skew_ps: tx.added_skew_s * 1e12,
                intrinsic_skew_ps: tx.intrinsic_skew_s * 1e12,
                quad_phase_err_deg: tx.quad_phase_err_rad.to_degrees(),
                n_symbols: tx.n_symbols,
                prbs_seed: tx.prbs_seed,
                rrc_span_symbols: tx.rrc_span_symbols,
            },
            det: DetSection {
                tone_offset_ghz: det.tone_offset_hz * 1e-9,
                cspr_db: det.cspr_db,
                pd_bandwidth_ghz: det.pd_bandwidth_hz * 1e-9,
                adc_rate_ghz: det.adc_rate_hz * 1e-9,
                adc_bits: det.adc_bits.unwrap_or(0),
                noise: det.snr_db.is_some(),
                snr_db: det.snr_db.unwrap_or(25.0),
                tone_linewidth_mhz: det.tone_linewidth_hz * 1e-6,
                rng_seed: det.rng_seed,
            },
            rx: RxSection {
                n_taps: rx.n_taps,
                band_fraction: rx.band_fraction,
                cr_block_len: rx.cr_block_len,
                rrc_span_symbols: rx.rrc_span_symbols,
            },
            cohd: CohdSection { lo_offset_mhz: 0.0 },
            sweep: SweepSection {
                skews_ps: (-8..=9).map(f64::from).collect(),
            },
            montecarlo: MonteCarloSection {
                n_trials: 300,
                seed: 1,
            },
            osnr: OsnrSection {
                baud_ghz: 138.0,
                n_symbols: 1 << 14,
                skews_ps: vec![-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
                target_ber: 1e-2,
                noise_seed: 1,
            },
        }
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Checks `user` against the shape of `template`, appending every problem to
/// `errors`, and returns the value to merge. Integers are accepted where
/// floats are expected.
fn conform(path: &str, template: &Value, user: &Value, errors: &mut Vec<String>) -> Option<Value> {
    match (template, user) {
        (Value::Float(_), Value::Integer(i)) => Some(Value::Float(*i as f64)),
        (Value::Integer(_), Value::Integer(i)) if *i < 0 => {
            errors.push(format!("{path}: must be non-negative, got {i}"));
            None
        }
        (Value::Table(t), Value::Table(u)) => {
            let mut out = t.clone();
            for (k, v) in u {
                let p = format!("{path}.{k}");
                match t.get(k) {
                    Some(tv) => {
                        if let Some(m) = conform(&p, tv, v, errors) {
                            out.insert(k.clone(), m);
                        }
                    }
                    None => errors.push(format!("{p}: unknown key")),
                }
            }
            Some(Value::Table(out))
        }
        (Value::Array(t), Value::Array(u)) => {
            let elem = t.first().cloned().unwrap_or(Value::Float(0.0));
            let mut out = Vec::with_capacity(u.len());
            for (i, v) in u.iter().enumerate() {
                out.push(conform(&format!("{path}[{i}]"), &elem, v, errors)?);
            }
            Some(Value::Array(out))
        }
        (t, u) if std::mem::discriminant(t) == std::mem::discriminant(u) => Some(u.clone()),
        (t, u) => {
            errors.push(format!(
                "{path}: expected {}, got {}",
                type_name(t),
                type_name(u)
            ));
            None
        }
    }
}

/// Parses `key.path=value` overrides (value in TOML syntax; bare words are
/// taken as strings) into `table`.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override {spec:?} is not key=value"))?;
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("override {key:?}: {p} is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Merges a user document (and overrides) onto the defaults and validates
    /// the result.
    pub fn from_toml(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut user: Table = toml::from_str(text)
            .map_err(|e| CliError::config("config is not valid TOML", vec![e.to_string()]))?;
        let mut errors = Vec::new();
        for o in overrides {
            if let Err(e) = apply_override(&mut user, o) {
                errors.push(e);
            }
        }
        let template = Value::try_from(RunConfig::default())
            .map_err(|e| CliError::new(crate::error::Kind::Internal, e.to_string()))?;
        let merged = conform("config", &template, &Value::Table(user), &mut errors);
        if !errors.is_empty() {
            return Err(CliError::config("config schema violations", errors));
        }
        let cfg: RunConfig = merged
            .expect("conform succeeds without errors")
            .try_into()
            .map_err(|e: toml::de::Error| {
                CliError::config("config schema violations", vec![e.to_string()])
            })?;
        let v = cfg.violations();
        if !v.is_empty() {
            return Err(CliError::config("config constraint violations", v));
        }
        Ok(cfg)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = self.methods() {
            v.push(e);
        }
        let tx = self.tx_config();
        v.extend(tx.violations().into_iter().map(|s| format!("tx: {s}")));
        v.extend(
            self.det_config()
                .violations(tx.band_edge_hz())
                .into_iter()
                .map(|s| format!("det: {s}")),
        );
        if !(self.det.snr_db.is_finite()) {
            v.push("det: snr_db must be finite".into());
        }
        v.extend(
            self.rx_config()
                .violations()
                .into_iter()
                .map(|s| format!("rx: {s}")),
        );
        if !self.cohd.lo_offset_mhz.is_finite()
            || self.cohd.lo_offset_mhz * 1e6 > tx.baud_hz / 8.0
            || -self.cohd.lo_offset_mhz * 1e6 > tx.baud_hz / 8.0
        {
            v.push("cohd: lo_offset_mhz must not exceed baud/8".into());
        }
        if self.sweep.skews_ps.iter().any(|s| !s.is_finite()) {
            v.push("sweep: skews_ps must be finite".into());
        }
        if self.montecarlo.n_trials < 2 {
            v.push("montecarlo: n_trials must be at least 2".into());
        }
        let inherited = tx.violations();
        let osnr = self.osnr_tx_config();
        v.extend(
            osnr.violations()
                .into_iter()
                .filter(|s| !inherited.contains(s))
                .map(|s| format!("osnr: {s}")),
        );
        if !(self.osnr.target_ber > 0.0 && self.osnr.target_ber < 0.5) {
            v.push(format!(
                "osnr: target_ber must be in (0, 0.5), got {}",
                self.osnr.target_ber
            ));
        }
        if self.osnr.skews_ps.iter().any(|s| !s.is_finite()) {
            v.push("osnr: skews_ps must be finite".into());
        }
        v
    }

    pub fn methods(&self) -> Result<Vec<Method>, String> {
        if self.methods.is_empty() {
            return Err("methods must not be empty".into());
        }
        self.methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(|e| format!("methods: {e}")))
            .collect()
    }

    pub fn tx_config(&self) -> TxConfig {
        let t = &self.tx;
        TxConfig {
            baud_hz: t.baud_ghz * 1e9,
            mod_order: t.mod_order,
            rolloff: t.rolloff,
            sps_dac: t.sps_dac,
            added_skew_s: t.added_skew_ps * 1e-12,
            intrinsic_skew_s: t.intrinsic_skew_ps * 1e-12,
            quad_phase_err_rad: t.quad_phase_err_deg.to_radians(),
            n_symbols: t.n_symbols,
            prbs_seed: t.prbs_seed,
            rrc_span_symbols: t.rrc_span_symbols,
            pre_emphasis_taps: None,
        }
    }

    pub fn det_config(&self) -> DetConfig {
        let d = &self.det;
        DetConfig {
            tone_offset_hz: d.tone_offset_ghz * 1e9,
            cspr_db: d.cspr_db,
            pd_bandwidth_hz: d.pd_bandwidth_ghz * 1e9,
            adc_rate_hz: d.adc_rate_ghz * 1e9,
            adc_bits: (d.adc_bits > 0).then_some(d.adc_bits),
            snr_db: d.noise.then_some(d.snr_db),
            tone_linewidth_hz: d.tone_linewidth_mhz * 1e6,
            rng_seed: d.rng_seed,
        }
    }

    pub fn rx_config(&self) -> RxConfig {
        RxConfig {
            n_taps: self.rx.n_taps,
            band_fraction: self.rx.band_fraction,
            cr_block_len: self.rx.cr_block_len,
            rrc_span_symbols: self.rx.rrc_span_symbols,
        }
    }

    pub fn osnr_tx_config(&self) -> TxConfig {
        TxConfig {
            baud_hz: self.osnr.baud_ghz * 1e9,
            n_symbols: self.osnr.n_symbols,
            intrinsic_skew_s: 0.0,
            added_skew_s: 0.0,
            ..self.tx_config()
        }
    }

    /// Library setup; only valid on a validated config.
    pub fn setup(&self) -> Setup {
        Setup {
            tx: self.tx_config(),
            det: self.det_config(),
            rx: self.rx_config(),
            methods: self.methods().expect("validated methods"),
            cohd_lo_offset_hz: self.cohd.lo_offset_mhz * 1e6,
        }
    }
}
