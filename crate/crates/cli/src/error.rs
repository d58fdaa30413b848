use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Config,
    Io,
    Dsp,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Io => 3,
            Kind::Dsp => 4,
            Kind::Internal => 5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn config(message: impl Into<String>, details: Vec<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
            details,
        }
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        Self::new(Kind::Io, format!("{context}: {err}"))
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: &'a CliError,
            exit_code: i32,
        }
        serde_json::to_string(&Envelope {
            error: self,
            exit_code: self.kind.exit_code(),
        })
        .unwrap_or_else(|_| format!("{{\"error\":{{\"message\":{:?}}}}}", self.message))
    }
}

impl From<skewcal::Error> for CliError {
    fn from(e: skewcal::Error) -> Self {
        match e {
            skewcal::Error::InvalidConfig(v) => CliError::config("invalid configuration", v),
            e if e.is_dsp_failure() => CliError::new(Kind::Dsp, e.to_string()),
            e => CliError::new(Kind::Internal, e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
