//! Maximum-likelihood fits of the classical GEV model and of the T-method
//! model `G_0((T(x|β) - b)/a)`, and quantile extrapolation from a fit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gev::{gev_logpdf, gev_sf, gev_upper_quantile, GevParams};
use crate::numdiff;
use crate::optimize::{nelder_mead, SimplexOptions};
use crate::rng::stream_rng;
use crate::transforms::{FamilyKind, TransformFamily};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const MIN_RECOMMENDED_SAMPLE: usize = 20;
const INITIAL_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Number of optimizer starts: the moment initializer plus jittered copies.
    pub restarts: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative half-width of the uniform jitter applied to later starts.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            tolerance: 1e-10,
            max_iterations: 10_000,
            jitter: 0.2,
            seed: 0x5EED,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                value: self.tolerance,
                reason: "must be positive",
            });
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::InvalidParameter {
                name: "jitter",
                value: self.jitter,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TMethodParams {
    pub family: TransformFamily,
    pub scale: f64,
    pub location: f64,
}

impl TMethodParams {
    pub fn new(family: TransformFamily, scale: f64, location: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
                reason: "must be positive and finite",
            });
        }
        Ok(Self {
            family,
            scale,
            location,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum FittedModel {
    Classical(GevParams),
    TMethod(TMethodParams),
}

impl FittedModel {
    /// Model probability of exceeding `x`.
    pub fn exceedance(&self, x: f64) -> f64 {
        match self {
            FittedModel::Classical(p) => p.sf(x),
            FittedModel::TMethod(p) => {
                if !p.family.in_domain(x) {
                    return if x.is_nan() { f64::NAN } else { 1.0 };
                }
                match p.family.forward(x) {
                    Ok((y, _)) => gev_sf(0.0, (y - p.location) / p.scale),
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.exceedance(x)
    }

    /// The `x` whose model exceedance probability is `exceedance`.
    pub fn extrapolate_quantile(&self, exceedance: f64) -> Result<f64> {
        match self {
            FittedModel::Classical(p) => p.upper_quantile(exceedance),
            FittedModel::TMethod(p) => {
                let y = p.location + p.scale * gev_upper_quantile(0.0, exceedance)?;
                p.family.inverse(y).map_err(|_| Error::Range { value: y })
            }
        }
    }

    /// Model quantile at probability `u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        crate::distributions::check_probability("model quantile", u)?;
        self.extrapolate_quantile(1.0 - u)
    }

    pub fn loglik(&self, data: &[f64]) -> Result<f64> {
        match self {
            FittedModel::Classical(p) => loglik_classical(p, data),
            FittedModel::TMethod(p) => loglik_tmethod(p, data),
        }
    }

    pub fn gev(&self) -> Option<&GevParams> {
        match self {
            FittedModel::Classical(p) => Some(p),
            FittedModel::TMethod(_) => None,
        }
    }

    pub fn tmethod(&self) -> Option<&TMethodParams> {
        match self {
            FittedModel::TMethod(p) => Some(p),
            FittedModel::Classical(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitWarning {
    SmallSample { size: usize, recommended: usize },
    UnconvergedRestarts { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    /// Log-likelihood re-evaluated at `model`.
    pub loglik: f64,
    pub converged: bool,
    /// Simplex iterations summed over all starts.
    pub iterations: usize,
    pub n_restarts_used: usize,
    pub sample_size: usize,
    /// Log-likelihood at each starting point.
    pub initial_logliks: Vec<f64>,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn extrapolate_quantile(&self, exceedance: f64) -> Result<f64> {
        self.model.extrapolate_quantile(exceedance)
    }
}

/// The value the fitted model exceeds with probability `exceedance`.
pub fn extrapolate_quantile(fit: &FitResult, exceedance: f64) -> Result<f64> {
    fit.model.extrapolate_quantile(exceedance)
}

fn check_nonempty(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        Err(Error::InvalidArgument("data must not be empty".into()))
    } else {
        Ok(())
    }
}

/// `Σ [ln G'_γ((x - b)/a) - ln a]`.
pub fn loglik_classical(params: &GevParams, data: &[f64]) -> Result<f64> {
    check_nonempty(data)?;
    let ln_a = params.scale.ln();
    Ok(data
        .iter()
        .map(|&x| gev_logpdf(params.gamma, (x - params.location) / params.scale) - ln_a)
        .sum())
}

/// `Σ [ln G'_0((T(x) - b)/a) + ln T'(x) - ln a]`.
pub fn loglik_tmethod(params: &TMethodParams, data: &[f64]) -> Result<f64> {
    check_nonempty(data)?;
    let ln_a = params.scale.ln();
    let mut total = 0.0;
    for (index, &x) in data.iter().enumerate() {
        let (y, ln_dy) = params
            .family
            .forward_log(x)
            .map_err(|_| Error::TransformDomain { index, value: x })?;
        total += gev_logpdf(0.0, (y - params.location) / params.scale) + ln_dy - ln_a;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Gev,
    Gumbel,
    Transform(FamilyKind),
}

/// Maps optimizer coordinates to model parameters. The coordinates are
/// `[γ, ln a, (b - b0)/a0]` for the GEV, `[ln a, (b - b0)/a0]` for the
/// Gumbel and identity models and `[ln a, (b - b0)/a0, ln β]` otherwise.
#[derive(Debug, Clone, Copy)]
struct Chart {
    target: Target,
    a0: f64,
    b0: f64,
}

impl Chart {
    fn dim(&self) -> usize {
        match self.target {
            Target::Gev => 3,
            Target::Gumbel | Target::Transform(FamilyKind::Identity) => 2,
            Target::Transform(_) => 3,
        }
    }

    fn model(&self, c: &[f64]) -> Option<FittedModel> {
        let (gamma, ln_a, rb) = match self.target {
            Target::Gev => (c[0], c[1], c[2]),
            _ => (0.0, c[0], c[1]),
        };
        let scale = ln_a.exp();
        let location = self.b0 + self.a0 * rb;
        match self.target {
            Target::Gev | Target::Gumbel => GevParams::new(gamma, scale, location)
                .ok()
                .map(FittedModel::Classical),
            Target::Transform(kind) => {
                let beta = if kind == FamilyKind::Identity {
                    1.0
                } else {
                    c[2].exp()
                };
                let family = TransformFamily::new(kind, beta).ok()?;
                TMethodParams::new(family, scale, location)
                    .ok()
                    .map(FittedModel::TMethod)
            }
        }
    }

    fn start(&self) -> Vec<f64> {
        match self.target {
            Target::Gev => vec![0.0, self.a0.ln(), 0.0],
            _ if self.dim() == 2 => vec![self.a0.ln(), 0.0],
            _ => vec![self.a0.ln(), 0.0, 0.0],
        }
    }

    /// Start scaled by independent factors in `1 ± jitter` per natural
    /// parameter; the shape `γ0 = 0` is shifted by `±jitter` instead.
    fn jittered<R: Rng + ?Sized>(&self, rng: &mut R, jitter: f64) -> Vec<f64> {
        let mut u = || 1.0 + jitter * (2.0 * rng.random::<f64>() - 1.0);
        let mut c = self.start();
        let (ia, ib) = match self.target {
            Target::Gev => {
                c[0] = u() - 1.0;
                (1, 2)
            }
            _ => (0, 1),
        };
        c[ia] += u().ln();
        c[ib] = self.b0 * (u() - 1.0) / self.a0;
        if let Target::Transform(FamilyKind::Power | FamilyKind::LogPower) = self.target {
            c[2] = u().ln();
        }
        c
    }
}

/// Gumbel moment estimates `(a0, b0)` of `values`.
pub fn moment_initializer(values: &[f64]) -> Result<(f64, f64)> {
    let m = values.len() as f64;
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateData);
    }
    let a0 = 6f64.sqrt() * sd / std::f64::consts::PI;
    Ok((a0, mean - EULER_GAMMA * a0))
}

/// GEV fit with free shape.
pub fn fit_classical(data: &[f64], config: &FitConfig) -> Result<FitResult> {
    fit(data, Target::Gev, config)
}

/// GEV fit with the shape pinned at zero.
pub fn fit_gumbel(data: &[f64], config: &FitConfig) -> Result<FitResult> {
    fit(data, Target::Gumbel, config)
}

/// T-method fit with `γ = 0` and `(β, a, b)` free.
pub fn fit_tmethod(data: &[f64], family: FamilyKind, config: &FitConfig) -> Result<FitResult> {
    fit(data, Target::Transform(family), config)
}

fn fit(data: &[f64], target: Target, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    check_nonempty(data)?;
    if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "observation {index} is not finite ({value})"
        )));
    }
    let initial_values: Vec<f64> = match target {
        Target::Transform(kind) => {
            let family = TransformFamily::new(kind, 1.0)?;
            data.iter()
                .enumerate()
                .map(|(index, &x)| {
                    family
                        .forward(x)
                        .map(|(y, _)| y)
                        .map_err(|_| Error::TransformDomain { index, value: x })
                })
                .collect::<Result<_>>()?
        }
        _ => data.to_vec(),
    };
    let (a0, b0) = moment_initializer(&initial_values)?;
    let chart = Chart { target, a0, b0 };
    let objective = |c: &[f64]| -> f64 {
        match chart.model(c) {
            Some(m) => m.loglik(data).map(|l| -l).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    };

    let opts = SimplexOptions {
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
    };
    let step = vec![INITIAL_STEP; chart.dim()];
    let mut rng = stream_rng(config.seed, 0);
    let mut iterations = 0;
    let mut initial_logliks = Vec::with_capacity(config.restarts);
    let mut best: Option<(bool, f64, Vec<f64>)> = None;
    let mut unconverged = 0;
    for k in 0..config.restarts {
        let start = if k == 0 {
            chart.start()
        } else {
            chart.jittered(&mut rng, config.jitter)
        };
        initial_logliks.push(-objective(&start));
        let run = nelder_mead(objective, &start, &step, &opts);
        iterations += run.iterations;
        if !run.converged {
            unconverged += 1;
        }
        let better = match &best {
            None => true,
            Some((conv, value, _)) => {
                (run.converged && !conv) || (run.converged == *conv && run.value < *value)
            }
        };
        if better {
            best = Some((run.converged, run.value, run.point));
        }
    }
    let (converged, _, point) = best.expect("at least one start");

    let mut warnings = Vec::new();
    if data.len() < MIN_RECOMMENDED_SAMPLE {
        warnings.push(FitWarning::SmallSample {
            size: data.len(),
            recommended: MIN_RECOMMENDED_SAMPLE,
        });
    }
    if unconverged > 0 {
        warnings.push(FitWarning::UnconvergedRestarts { count: unconverged });
    }
    let model = chart
        .model(&point)
        .ok_or_else(|| Error::InvalidArgument("optimizer left the parameter space".into()))?;
    let loglik = model.loglik(data)?;
    let result = FitResult {
        model,
        loglik,
        converged: converged && loglik.is_finite(),
        iterations,
        n_restarts_used: config.restarts,
        sample_size: data.len(),
        initial_logliks,
        warnings,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NotConverged {
            best: Box::new(result),
        })
    }
}

/// Gradient of the log-likelihood at the fitted model with respect to the
/// standardized coordinates `(γ, ln a, b/a, ln β)`, restricted to the
/// coordinates the model actually has.
pub fn loglik_gradient(model: &FittedModel, data: &[f64]) -> Result<Vec<f64>> {
    const H: f64 = 1e-3;
    match *model {
        FittedModel::Classical(p) => {
            let f = |c: &[f64]| {
                let scale = c[1].exp();
                GevParams::new(c[0], scale, c[2] * scale)
                    .and_then(|q| loglik_classical(&q, data))
                    .unwrap_or(f64::NAN)
            };
            let c = [p.gamma, p.scale.ln(), p.location / p.scale];
            Ok(numdiff::gradient(f, &c, H))
        }
        FittedModel::TMethod(p) => {
            let kind = p.family.kind;
            let f = |c: &[f64]| {
                let scale = c[0].exp();
                let beta = if c.len() > 2 { c[2].exp() } else { 1.0 };
                TransformFamily::new(kind, beta)
                    .and_then(|fam| TMethodParams::new(fam, scale, c[1] * scale))
                    .and_then(|q| loglik_tmethod(&q, data))
                    .unwrap_or(f64::NAN)
            };
            let mut c = vec![p.scale.ln(), p.location / p.scale];
            if kind != FamilyKind::Identity {
                c.push(p.family.beta.ln());
            }
            Ok(numdiff::gradient(f, &c, H))
        }
    }
}
