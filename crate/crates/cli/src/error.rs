use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

use crate::data::BadRow;

pub const ERROR_FORMAT: &str = "tmethod.error/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{total} malformed row(s){}", path.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        rows: Vec<BadRow>,
        total: usize,
    },

    #[error("input holds no values")]
    EmptyInput,

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] tmethod::Error),

    #[error("cannot encode output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use tmethod::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::EmptyInput => "empty-input",
            CliError::Usage(_) => "usage",
            CliError::Json(_) => "encoding",
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } => "invalid-parameter",
                E::Domain { .. } => "domain",
                E::InvalidArgument(_) => "invalid-argument",
                E::InsufficientData { .. } => "insufficient-data",
                E::TransformDomain { .. } => "transform-domain",
                E::Range { .. } => "range",
                E::DegenerateData => "degenerate-data",
                E::NotConverged { .. } => "not-converged",
                E::Integration(_) => "integration",
                E::Singularity { .. } => "singularity",
                E::Underflow { .. } => "underflow",
                E::NotApplicable(_) => "not-applicable",
                E::Experiment(_) => "experiment",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(tmethod::Error::NotConverged { .. }) => 3,
            _ => 1,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "format": ERROR_FORMAT,
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Parse { path, rows, total } => {
                v["rows"] = json!(rows);
                v["total_bad_rows"] = json!(total);
                if let Some(p) = path {
                    v["path"] = json!(p.display().to_string());
                }
            }
            CliError::Io { path, .. } => v["path"] = json!(path.display().to_string()),
            CliError::Core(tmethod::Error::TransformDomain { index, value }) => {
                v["observation_index"] = json!(index);
                v["value"] = json!(value);
            }
            _ => {}
        }
        v
    }
}
