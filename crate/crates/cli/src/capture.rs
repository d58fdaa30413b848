//! Photocurrent capture files: raw little-endian f64 samples with no header,
//! plus a JSON sidecar describing the known frame.

use crate::error::{CliError, CliResult, Kind};
use serde::{Deserialize, Serialize};
use skewcal::fieldrec::FieldRecParams;
use skewcal::txsim::{generate_symbols, SymbolFrame, TxConfig};
use skewcal::waveform::RealSignal;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub sample_rate_hz: f64,
    pub baud_hz: f64,
    pub tone_offset_hz_coarse: f64,
    pub rolloff: f64,
    pub mod_order: u32,
    pub prbs_seed: u64,
    /// Defaults to the number of symbols the capture spans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_symbols: Option<usize>,
}

const REQUIRED: [&str; 6] = [
    "sample_rate_hz",
    "baud_hz",
    "tone_offset_hz_coarse",
    "rolloff",
    "mod_order",
    "prbs_seed",
];

impl Sidecar {
    pub fn parse(text: &str) -> CliResult<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::config("sidecar is not valid JSON", vec![e.to_string()]))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::config("sidecar must be a JSON object", vec![]))?;
        let missing: Vec<String> = REQUIRED
            .iter()
            .filter(|k| !obj.contains_key(**k))
            .map(|k| format!("missing field {k}"))
            .collect();
        if !missing.is_empty() {
            return Err(CliError::config("sidecar schema violations", missing));
        }
        let s: Sidecar = serde_json::from_value(value)
            .map_err(|e| CliError::config("sidecar schema violations", vec![e.to_string()]))?;
        let mut v = Vec::new();
        for (name, x) in [
            ("sample_rate_hz", s.sample_rate_hz),
            ("baud_hz", s.baud_hz),
            ("tone_offset_hz_coarse", s.tone_offset_hz_coarse),
        ] {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        }
        if !(0.0..=1.0).contains(&s.rolloff) {
            v.push(format!("rolloff must be in [0, 1], got {}", s.rolloff));
        }
        if !v.is_empty() {
            return Err(CliError::config("sidecar constraint violations", v));
        }
        Ok(s)
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> FieldRecParams {
        FieldRecParams::new(self.tone_offset_hz_coarse, self.baud_hz, self.rolloff)
    }

    /// Regenerates the known frame; the frame length defaults to the capture
    /// duration in symbols.
    pub fn frame(&self, capture_len: usize) -> CliResult<SymbolFrame> {
        let n_symbols = self.n_symbols.unwrap_or_else(|| {
            (capture_len as f64 * self.baud_hz / self.sample_rate_hz).round() as usize
        });
        let tx = TxConfig {
            baud_hz: self.baud_hz,
            mod_order: self.mod_order,
            rolloff: self.rolloff,
            n_symbols,
            prbs_seed: self.prbs_seed,
            ..TxConfig::default()
        };
        let v: Vec<String> = tx
            .violations()
            .into_iter()
            .filter(|s| !s.contains("skew"))
            .collect();
        if !v.is_empty() {
            return Err(CliError::config("sidecar constraint violations", v));
        }
        generate_symbols(&tx).map_err(CliError::from)
    }
}

pub fn write_waveform(path: &Path, samples: &[f64]) -> CliResult<()> {
    let bytes: Vec<u8> = samples.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

pub fn read_waveform(path: &Path, sample_rate_hz: f64) -> CliResult<RealSignal> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::new(
            Kind::Io,
            format!(
                "{} is truncated: {} bytes is not a whole number of f64 samples",
                path.display(),
                bytes.len()
            ),
        ));
    }
    let samples: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    RealSignal::new(samples, sample_rate_hz)
        .map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))
}
