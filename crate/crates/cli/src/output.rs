use crate::error::{CliError, CliResult};
use serde::Serialize;
use skewcal::experiments::Table;
use skewcal::fieldrec::Method;
use skewcal::rxdsp::RxOutcome;
use std::path::{Path, PathBuf};

pub fn version() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("SKEWCAL_GIT_DESCRIBE")
    )
}

/// Per-method result as written to JSON, in user-facing units.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub method: Method,
    pub est_skew_ps: f64,
    pub evm_pct: f64,
    pub evm_blind_pct: f64,
    pub ber: f64,
    pub ber_blind: f64,
    pub foe_ghz: f64,
    pub residual_error: f64,
    pub lag_symbols: i64,
    pub rotation: u8,
}

impl From<&RxOutcome> for EstimateRecord {
    fn from(o: &RxOutcome) -> Self {
        Self {
            method: o.estimate.method,
            est_skew_ps: o.estimate.skew_s * 1e12,
            evm_pct: o.estimate.evm_pct,
            evm_blind_pct: o.evm_uncompensated_pct,
            ber: o.ber_compensated,
            ber_blind: o.ber_uncompensated,
            foe_ghz: o.estimate.foe_hz * 1e-9,
            residual_error: o.estimate.residual_error,
            lag_symbols: o.lag_symbols,
            rotation: o.rotation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub method: Method,
    pub error: String,
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(path)
            .map_err(|e| CliError::io(&format!("creating {}", path.display()), e))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::new(crate::error::Kind::Internal, e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, table: &Table) -> CliResult<PathBuf> {
        let path = self.path(name);
        let err = |e: csv::Error| CliError::io(&format!("writing {}", path.display()), e);
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(&table.header).map_err(err)?;
        for row in &table.rows {
            w.write_record(row).map_err(err)?;
        }
        w.flush()
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}
