use std::path::PathBuf;

use chrono::NaiveDate;
use serde_json::{json, Value};
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}, line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}: missing dates {}", path.display(), join_dates(missing))]
    DateGap { path: PathBuf, missing: Vec<NaiveDate> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-monotone quantiles for {observable} on {date}")]
    NonMonotone { date: NaiveDate, observable: String },

    #[error("scoring failed: {0}")]
    Score(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] epiassim_core::Error),
}

fn join_dates(ds: &[NaiveDate]) -> String {
    ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::DateGap { .. } => "date_gap",
            CliError::Config(_) => "invalid_config",
            CliError::NonMonotone { .. } => "non_monotone_quantiles",
            CliError::Score(_) => "scoring",
            CliError::Json(_) => "json",
            CliError::Core(e) => e.kind(),
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Parse { line, .. } => body["line"] = json!(line),
            CliError::DateGap { missing, .. } => body["missing_dates"] = json!(missing),
            CliError::Core(e) => {
                if let Some(w) = e.window() {
                    body["window"] = json!(w);
                }
            }
            _ => {}
        }
        json!({ "error": body })
    }
}
