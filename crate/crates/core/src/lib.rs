//! Extreme value statistics with transformed block maxima.
//!
//! Block maxima of a law `F` are modelled either by the classical generalized
//! extreme value law, or by the Gumbel law applied to `T(x|β)` for a monotone
//! transformation family `T` (the T-method). The [`convergence`] module
//! measures how quickly `F^n` approaches its limit for the built-in laws.

pub mod convergence;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod gev;
pub mod numdiff;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod transforms;

pub use distributions::{ContinuousLaw, DistributionKind, DistributionSpec};
pub use error::{Error, Result};
pub use fitting::{
    extrapolate_quantile, fit_classical, fit_gumbel, fit_tmethod, loglik_classical, loglik_tmethod,
    FitConfig, FitResult, FittedModel, TMethodParams,
};
pub use gev::{gev_cdf, gev_logpdf, gev_quantile, h_hat, GevParams};
pub use transforms::{suggest_family, FamilyKind, TransformFamily};
