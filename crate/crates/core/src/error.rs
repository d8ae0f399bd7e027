use thiserror::Error;

use crate::fitting::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or model parameter lies outside its admissible range.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A point argument lies outside the domain of the function evaluated.
    #[error("{what}: argument {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// An observation cannot be passed through the transformation.
    #[error("observation {index} ({value}) is outside the transform domain")]
    TransformDomain { index: usize, value: f64 },

    /// Extrapolated value falls outside the range of the transformation.
    #[error("extrapolated value {value} is outside the range of the transformation")]
    Range { value: f64 },

    #[error("data are degenerate (zero variance); the likelihood is unbounded")]
    DegenerateData,

    #[error("optimizer did not converge after {} restarts", .best.n_restarts_used)]
    NotConverged { best: Box<FitResult> },

    #[error("numerical integration failed: {0}")]
    Integration(String),

    #[error("density vanishes at {x}; expression is singular")]
    Singularity { x: f64 },

    #[error("both tail probabilities underflow at x = {x}")]
    Underflow { x: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("experiment failed: {0}")]
    Experiment(String),
}
