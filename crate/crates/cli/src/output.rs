//! Output records and writers. Every JSON document carries a `format` field
//! and every CSV file starts with a `# format: ...` line.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tmethod::fitting::FitWarning;
use tmethod::transforms::FamilySuggestion;
use tmethod::{FamilyKind, FitResult, FittedModel};

use crate::error::CliError;

pub const FIT_FORMAT: &str = "tmethod.fit/1";
pub const CONVERGENCE_FORMAT: &str = "tmethod.convergence/1";
pub const SUGGESTION_FORMAT: &str = "tmethod.suggestion/1";
pub const QQ_FORMAT: &str = "tmethod.qq/1";
pub const RUNS_FORMAT: &str = "tmethod.mc-runs/1";
pub const DISK_POINTS_FORMAT: &str = "tmethod.disk-points/1";

pub const QQ_COLUMNS: [&str; 5] = [
    "method",
    "empirical",
    "model",
    "plotting_position",
    "exceedance",
];
pub const RUNS_COLUMNS: [&str; 4] = ["run_id", "method", "level", "quantile"];
pub const DISK_COLUMNS: [&str; 4] = ["radius", "exact", "radius_fit", "area_fit"];
pub const CONVERGENCE_COLUMNS: [&str; 8] = [
    "n",
    "a_n",
    "b_n",
    "w_n",
    "d_n",
    "closed_form_a_n",
    "closed_form_b_n",
    "closed_form_w_n",
];

#[derive(Debug, Serialize)]
pub struct QuantileRecord {
    pub exceedance: f64,
    pub quantile: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRecord {
    pub family: FamilyKind,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct FitRecord {
    pub format: &'static str,
    pub source: String,
    /// `classical` or `tmethod`.
    pub model: &'static str,
    pub family: Option<FamilyKind>,
    pub beta: Option<f64>,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_restarts_used: usize,
    pub sample_size: usize,
    pub initial_logliks: Vec<f64>,
    pub warnings: Vec<FitWarning>,
    pub quantiles: Vec<QuantileRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<FamilySuggestion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<CandidateRecord>>,
}

impl FitRecord {
    pub fn new(source: String, fit: &FitResult, levels: &[f64]) -> Self {
        let (model, family, beta, gamma, a, b) = match &fit.model {
            FittedModel::Classical(p) => ("classical", None, None, p.gamma, p.scale, p.location),
            FittedModel::TMethod(p) => (
                "tmethod",
                Some(p.family.kind),
                (p.family.kind != FamilyKind::Identity).then_some(p.family.beta),
                0.0,
                p.scale,
                p.location,
            ),
        };
        let quantiles = levels
            .iter()
            .map(|&p| match fit.extrapolate_quantile(p) {
                Ok(q) => QuantileRecord {
                    exceedance: p,
                    quantile: Some(q),
                    error: None,
                },
                Err(e) => QuantileRecord {
                    exceedance: p,
                    quantile: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        Self {
            format: FIT_FORMAT,
            source,
            model,
            family,
            beta,
            gamma,
            a,
            b,
            loglik: fit.loglik,
            converged: fit.converged,
            iterations: fit.iterations,
            n_restarts_used: fit.n_restarts_used,
            sample_size: fit.sample_size,
            initial_logliks: fit.initial_logliks.clone(),
            warnings: fit.warnings.clone(),
            quantiles,
            suggestion: None,
            candidates: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SuggestionRecord {
    pub format: &'static str,
    pub source: String,
    pub sample_size: usize,
    #[serde(flatten)]
    pub suggestion: FamilySuggestion,
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(path, text.as_bytes())
}

pub fn write_csv(
    path: Option<&Path>,
    format: &str,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut text = format!("# format: {format}\n{}\n", columns.join(","));
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    emit(path, text.as_bytes())
}

/// Shortest representation that reads back to the same value; empty when
/// absent.
pub fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}
