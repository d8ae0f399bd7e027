//! How fast `F(a_n x + b_n)^n` approaches its Gumbel limit.
//!
//! Everything here is driven by the auxiliary function
//! `j(x) = F^{-1}(e^{-1/x})`: the optimal norming constants are
//! `a_n = n j'(n)` and `b_n = j(n)`, and the leading error of the limit law
//! scales with `W(n) = n j''(n)/j'(n) - γ + 1`.
//!
//! Derivatives of `j` are taken numerically on `v(t) = j(e^t)`, which is
//! close to linear for every law in the Gumbel domain. With `x = e^t`,
//! `j' = v'/x`, `j'' = (v'' - v')/x²` and `W = v''/v' - γ`.
//! Closed-form asymptotics are provided for the built-in laws and serve as
//! cross-checks only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ContinuousLaw, DistributionKind, DistributionSpec};
use crate::error::{Error, Result};
use crate::gev::{gev_cdf, gev_logpdf, gev_quantile, h_hat};
use crate::numdiff;
use crate::special::ln_gamma;

/// Initial Richardson step in `t = ln x`.
const LOG_STEP: f64 = 0.1;
const DN_GRID: usize = 10_000;
const DN_EDGE: f64 = 1e-8;
const EDGEWORTH_GRID: usize = 1_000;
const EDGEWORTH_EDGE: f64 = 1e-4;
const TAIL_FLOOR: f64 = 1e-300;

/// Scale `a_n` and location `b_n` of the affine map `x -> a_n x + b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norming {
    pub scale: f64,
    pub location: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormingRule {
    /// `a_n = n j'(n)`, `b_n = j(n)` evaluated numerically.
    Optimal,
    /// Leading-order closed forms of the built-in laws.
    Asymptotic,
}

fn check_n(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "block size must be at least 2, got {n}"
        )));
    }
    Ok(n as f64)
}

/// `v(t) = j(e^t) = F^{-1}(exp(-e^{-t}))`.
fn log_j<L: ContinuousLaw + ?Sized>(law: &L, t: f64) -> f64 {
    law.quantile_of_neg_ln_cdf((-t).exp()).unwrap_or(f64::NAN)
}

fn log_step(t: f64) -> f64 {
    LOG_STEP.min(0.5 * t.abs().max(1e-3))
}

/// `j(x)` (`order = 0`) or its first or second derivative.
pub fn j_eval<L: ContinuousLaw + ?Sized>(law: &L, x: f64, order: u8) -> Result<f64> {
    if !(x > 1.0 && x.is_finite()) {
        return Err(Error::Domain {
            what: "auxiliary function j",
            value: x,
        });
    }
    let t = x.ln();
    match order {
        0 => law.quantile_of_neg_ln_cdf(1.0 / x),
        1 => {
            let v1 = numdiff::first(|s| log_j(law, s), t, log_step(t)).value;
            finite(v1 / x, x)
        }
        2 => {
            let h = log_step(t);
            let v1 = numdiff::first(|s| log_j(law, s), t, h).value;
            let v2 = numdiff::second(|s| log_j(law, s), t, h).value;
            finite((v2 - v1) / (x * x), x)
        }
        _ => Err(Error::InvalidArgument(format!(
            "derivative order {order} is not supported (expected 0, 1 or 2)"
        ))),
    }
}

fn finite(v: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            what: "auxiliary function derivative",
            value: x,
        })
    }
}

/// Optimal norming constants `(n j'(n), j(n))`.
pub fn norming<L: ContinuousLaw + ?Sized>(law: &L, n: u64) -> Result<Norming> {
    let x = check_n(n)?;
    let t = x.ln();
    let scale = numdiff::first(|s| log_j(law, s), t, log_step(t)).value;
    let location = j_eval(law, x, 0)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain {
            what: "norming scale",
            value: scale,
        });
    }
    Ok(Norming { scale, location })
}

/// Leading-order norming constants of a built-in law.
pub fn asymptotic_norming(dist: &DistributionSpec, n: u64) -> Result<Norming> {
    use DistributionKind::*;
    let x = check_n(n)?;
    let ln_n = x.ln();
    let (scale, location) = match dist.kind() {
        Exponential | DiskArea | Gumbel => (1.0, ln_n),
        Normal => {
            let l = 2.0 * normal_log_n(x);
            let b = (l - l.ln()).sqrt();
            (1.0 / b, b)
        }
        LogNormal => {
            let d = (2.0 * normal_log_n(x)).sqrt();
            (d.exp() / d, d.exp())
        }
        Rayleigh => {
            let alpha = dist.shape();
            (ln_n.powf(1.0 / alpha - 1.0) / alpha, ln_n.powf(1.0 / alpha))
        }
        Gamma => {
            let k = dist.shape();
            let l = gamma_log_n(x, k)?;
            (1.0 + (k - 1.0) / l, l + (k - 1.0) * l.ln())
        }
        DiskRadius => {
            let b = (ln_n / std::f64::consts::PI).sqrt();
            (1.0 / (2.0 * std::f64::consts::PI * b), b)
        }
    };
    Ok(Norming { scale, location })
}

/// `ln(n / √(2π))`.
fn normal_log_n(x: f64) -> f64 {
    x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `ln(n / Γ(k))`, which must be positive for the expansion to apply.
fn gamma_log_n(x: f64, k: f64) -> Result<f64> {
    let l = x.ln() - ln_gamma(k);
    if l > 0.0 {
        Ok(l)
    } else {
        Err(Error::NotApplicable(format!(
            "closed forms need n > Γ({k}), got n = {x}"
        )))
    }
}

/// Leading-order asymptotic of `W(n)` for a built-in law.
pub fn closed_form_w(dist: &DistributionSpec, n: u64) -> Result<f64> {
    use DistributionKind::*;
    let x = check_n(n)?;
    let ln_n = x.ln();
    Ok(match dist.kind() {
        Exponential | DiskArea => 0.5 / x,
        Gumbel => 0.0,
        Normal => -0.5 / normal_log_n(x),
        LogNormal => 1.0 / (2.0 * normal_log_n(x)).sqrt(),
        Rayleigh => {
            let alpha = dist.shape();
            (1.0 - alpha) / (alpha * ln_n) + 0.5 / x
        }
        Gamma => {
            let k = dist.shape();
            let l = gamma_log_n(x, k)?;
            -(k - 1.0) / ((k - 1.0 + l) * l)
        }
        DiskRadius => -0.5 / ln_n + 0.5 / x,
    })
}

/// Constants under the requested rule.
pub fn norming_by_rule(dist: &DistributionSpec, n: u64, rule: NormingRule) -> Result<Norming> {
    match rule {
        NormingRule::Optimal => norming(dist, n),
        NormingRule::Asymptotic => asymptotic_norming(dist, n),
    }
}

/// `W(n) = n j''(n)/j'(n) - γ + 1`.
pub fn w_rate<L: ContinuousLaw + ?Sized>(law: &L, n: u64, gamma: f64) -> Result<f64> {
    let x = check_n(n)?;
    let t = x.ln();
    let h = log_step(t);
    let v1 = numdiff::first(|s| log_j(law, s), t, h).value;
    let v2 = numdiff::second(|s| log_j(law, s), t, h).value;
    finite(v2 / v1 - gamma, x)
}

/// `F(a x + b)^n` computed as `exp(n ln F)`.
fn block_cdf<L: ContinuousLaw + ?Sized>(law: &L, n: f64, c: &Norming, x: f64) -> f64 {
    (n * law.ln_cdf(c.scale * x + c.location)).exp()
}

/// `sup_x |F(a_n x + b_n)^n - G_0(x)|` over `G_0(x) ∈ [1e-8, 1 - 1e-8]`.
///
/// Scans a uniform grid in `G_0`-probability, then refines the best cell by
/// golden-section search.
pub fn uniform_error<L: ContinuousLaw + Sync + ?Sized>(
    law: &L,
    n: u64,
    c: &Norming,
) -> Result<f64> {
    let nf = check_n(n)?;
    let gap = |p: f64| -> f64 {
        let x = -(-p.ln()).ln();
        (block_cdf(law, nf, c, x) - p).abs()
    };
    let step = (1.0 - 2.0 * DN_EDGE) / (DN_GRID - 1) as f64;
    let at = |i: usize| DN_EDGE + step * i as f64;
    let values: Vec<f64> = (0..DN_GRID).into_par_iter().map(|i| gap(at(i))).collect();
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Domain {
            what: "uniform error",
            value: at(i),
        });
    }
    let (best, &top) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is not empty");
    let lo = at(best.saturating_sub(1));
    let hi = at((best + 1).min(DN_GRID - 1));
    Ok(golden_max(&gap, lo, hi).max(top).min(1.0))
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// `h(x) = -ln F(x) - {-F(x) F''(x) ln F(x) / F'(x)² + 1}`.
pub fn hazard_remainder<L: ContinuousLaw + ?Sized>(law: &L, x: f64) -> Result<f64> {
    let f = law.density(x, 0)?;
    let f1 = law.density(x, 1)?;
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::Singularity { x });
    }
    let neg_ln_cdf = -law.ln_cdf(x);
    let cdf = law.cdf(x);
    if !(cdf > 0.0 && cdf < 1.0) {
        return Err(Error::Domain {
            what: "hazard remainder",
            value: x,
        });
    }
    Ok(neg_ln_cdf * (1.0 - cdf * (f1 / f) / f) - 1.0)
}

/// `L(x) = (1 - F(a_n x + b_n)^n) / (1 - G_0(x))`.
pub fn tail_ratio<L: ContinuousLaw + ?Sized>(law: &L, c: &Norming, n: u64, x: f64) -> Result<f64> {
    let nf = check_n(n)?;
    let numerator = -(nf * law.ln_cdf(c.scale * x + c.location)).exp_m1();
    let denominator = -(-(-x).exp()).exp_m1();
    if !(numerator >= TAIL_FLOOR && denominator >= TAIL_FLOOR) {
        return Err(Error::Underflow { x });
    }
    Ok(numerator / denominator)
}

/// `sup_x |(F(a_n x + b_n)^n - G_γ(x))/W(n) + G_γ'(x) Ĥ_γ(G_γ(x))|` over
/// `G_γ(x) ∈ [1e-4, 1 - 1e-4]`, with optimal norming and numeric `W(n)`.
///
/// With `W(n)` as defined by [`w_rate`] the scaled error tends to
/// `-G_γ' Ĥ_γ`, so the residual is the distance from that limit.
pub fn edgeworth_residual<L: ContinuousLaw + Sync + ?Sized>(
    law: &L,
    n: u64,
    rho: f64,
    gamma: f64,
) -> Result<f64> {
    let nf = check_n(n)?;
    let w = w_rate(law, n, gamma)?;
    if w.abs() < 1e-12 {
        return Err(Error::NotApplicable(format!(
            "W({n}) = {w:e} vanishes; the law is already at its limit"
        )));
    }
    let c = norming(law, n)?;
    let step = (1.0 - 2.0 * EDGEWORTH_EDGE) / (EDGEWORTH_GRID - 1) as f64;
    let terms: Vec<Result<f64>> = (0..EDGEWORTH_GRID)
        .into_par_iter()
        .map(|i| {
            let p = EDGEWORTH_EDGE + step * i as f64;
            let x = gev_quantile(gamma, p)?;
            let scaled = (block_cdf(law, nf, &c, x) - gev_cdf(gamma, x)) / w;
            let limit = gev_logpdf(gamma, x).exp() * h_hat(gamma, rho, x)?;
            Ok((scaled + limit).abs())
        })
        .collect();
    let mut sup = 0.0f64;
    for t in terms {
        sup = sup.max(t?);
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
    pub w_n: f64,
    /// Uniform error under the optimal norming.
    pub d_n: f64,
    pub closed_form_a_n: Option<f64>,
    pub closed_form_b_n: Option<f64>,
    pub closed_form_w_n: Option<f64>,
}

/// Numeric constants, rate and uniform error of a built-in law at `n`,
/// next to its closed-form asymptotics where those apply.
pub fn convergence_report(dist: &DistributionSpec, n: u64) -> Result<ConvergenceReport> {
    let c = norming(dist, n)?;
    let w_n = w_rate(dist, n, 0.0)?;
    let d_n = uniform_error(dist, n, &c)?;
    let closed = asymptotic_norming(dist, n).ok();
    Ok(ConvergenceReport {
        n,
        a_n: c.scale,
        b_n: c.location,
        w_n,
        d_n,
        closed_form_a_n: closed.map(|c| c.scale),
        closed_form_b_n: closed.map(|c| c.location),
        closed_form_w_n: closed_form_w(dist, n).ok(),
    })
}
