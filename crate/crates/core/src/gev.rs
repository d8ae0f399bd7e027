//! The generalized extreme value family `G_γ(x) = exp{-(1 + γx)^{-1/γ}}`,
//! its Gumbel member `G_0(x) = exp{-e^{-x}}`, and the second-order
//! correction `Ĥ_γ` of the block-maximum approximation.
//!
//! All functions work on the standardized coordinate; location and scale are
//! applied by callers through [`GevParams`].

use serde::{Deserialize, Serialize};

use crate::distributions::check_probability;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Below this magnitude the shape is treated with a series around `γ = 0`.
pub const GUMBEL_THRESHOLD: f64 = 1e-8;

/// Shape, scale and location of a GEV law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub gamma: f64,
    pub scale: f64,
    pub location: f64,
}

impl GevParams {
    pub fn new(gamma: f64, scale: f64, location: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
                reason: "must be positive and finite",
            });
        }
        if !gamma.is_finite() || !location.is_finite() {
            return Err(Error::InvalidArgument(
                "GEV shape and location must be finite".into(),
            ));
        }
        Ok(Self {
            gamma,
            scale,
            location,
        })
    }

    pub fn gumbel(scale: f64, location: f64) -> Result<Self> {
        Self::new(0.0, scale, location)
    }

    fn standardize(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gev_cdf(self.gamma, self.standardize(x))
    }

    /// `1 - G(x)`, accurate deep in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        gev_sf(self.gamma, self.standardize(x))
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        gev_logpdf(self.gamma, self.standardize(x)) - self.scale.ln()
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        Ok(self.location + self.scale * gev_quantile(self.gamma, u)?)
    }

    /// Quantile at exceedance probability `1 - u`.
    pub fn upper_quantile(&self, exceedance: f64) -> Result<f64> {
        Ok(self.location + self.scale * gev_upper_quantile(self.gamma, exceedance)?)
    }
}

/// `s = -ln(-ln G_γ(x)) = ln(1 + γx)/γ`, or `None` outside the support.
pub fn reduced_variate(gamma: f64, x: f64) -> Option<f64> {
    let t = gamma * x;
    if 1.0 + t <= 0.0 {
        return None;
    }
    if gamma.abs() < GUMBEL_THRESHOLD {
        // ln(1+γx)/γ = x - γx²/2 + γ²x³/3 - ...
        Some(x * (1.0 - t * (0.5 - t / 3.0)))
    } else {
        Some(t.ln_1p() / gamma)
    }
}

pub fn gev_cdf(gamma: f64, x: f64) -> f64 {
    match reduced_variate(gamma, x) {
        Some(s) => (-(-s).exp()).exp(),
        None if gamma > 0.0 => 0.0,
        None => 1.0,
    }
}

/// `1 - G_γ(x)`.
pub fn gev_sf(gamma: f64, x: f64) -> f64 {
    match reduced_variate(gamma, x) {
        Some(s) => -(-(-s).exp()).exp_m1(),
        None if gamma > 0.0 => 1.0,
        None => 0.0,
    }
}

/// `ln G'_γ(x) = -(1 + γ) s - e^{-s}`; negative infinity off the support.
pub fn gev_logpdf(gamma: f64, x: f64) -> f64 {
    match reduced_variate(gamma, x) {
        Some(_) if gamma == 0.0 => -x - (-x).exp(),
        Some(s) => -(1.0 + gamma) * s - (-s).exp(),
        None => f64::NEG_INFINITY,
    }
}

/// `G_γ^{-1}(u)`.
pub fn gev_quantile(gamma: f64, u: f64) -> Result<f64> {
    check_probability("GEV quantile", u)?;
    Ok(from_reduced(gamma, -(-u.ln()).ln()))
}

/// `G_γ^{-1}(1 - p)` evaluated without forming `1 - p`.
pub fn gev_upper_quantile(gamma: f64, exceedance: f64) -> Result<f64> {
    check_probability("GEV upper quantile", exceedance)?;
    Ok(from_reduced(gamma, -(-(-exceedance).ln_1p()).ln()))
}

/// Inverse of [`reduced_variate`]: `x = (e^{γs} - 1)/γ`.
fn from_reduced(gamma: f64, s: f64) -> f64 {
    if gamma == 0.0 {
        s
    } else if gamma.abs() < GUMBEL_THRESHOLD {
        let t = gamma * s;
        s * (1.0 + t * (0.5 + t / 6.0))
    } else {
        (gamma * s).exp_m1() / gamma
    }
}

/// `Ĥ_γ(G_γ(x)) = H_γ(-ln(-ln G_γ(x)))`, with
/// `H_γ(y) = ∫_0^y e^{γu} ∫_0^u e^{ρs} ds du` for `γ ≥ 0` and
/// `H_γ(y) = -∫_y^∞ e^{γu} ∫_0^u e^{ρs} ds du` for `γ < 0`.
///
/// The Gumbel cases `ρ = -1` and `ρ = 0` use their closed forms
/// `e^{-x} + x - 1` and `x²/2`; everything else is integrated numerically.
pub fn h_hat(gamma: f64, rho: f64, x: f64) -> Result<f64> {
    if gamma == 0.0 && rho == -1.0 {
        return Ok((-x).exp() + x - 1.0);
    }
    if gamma == 0.0 && rho == 0.0 {
        return Ok(0.5 * x * x);
    }
    h_hat_numeric(gamma, rho, x)
}

const H_TOL: f64 = 1e-8;

/// Nested adaptive quadrature for `Ĥ_γ`, used for every `(γ, ρ)`.
pub fn h_hat_numeric(gamma: f64, rho: f64, x: f64) -> Result<f64> {
    let y = reduced_variate(gamma, x).ok_or(Error::Domain {
        what: "h_hat",
        value: x,
    })?;
    let inner = |u: f64| -> f64 {
        adaptive_simpson(&|s: f64| (rho * s).exp(), 0.0, u, 1e-3 * H_TOL).unwrap_or(f64::NAN)
    };
    let outer = |u: f64| (gamma * u).exp() * inner(u);
    if gamma >= 0.0 {
        return adaptive_simpson(&outer, 0.0, y, H_TOL);
    }
    // Integrand behaves like e^{-κu} times a polynomial in u.
    let decay = -(gamma + rho.max(0.0));
    if decay <= 0.0 {
        return Err(Error::Integration(format!(
            "improper integral diverges for gamma = {gamma}, rho = {rho}"
        )));
    }
    let horizon = y.max(0.0) + 60.0 / decay;
    let pieces = 16;
    let width = (horizon - y) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = y + k as f64 * width;
        total += adaptive_simpson(&outer, a, a + width, H_TOL / pieces as f64)?;
    }
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn cdf_examples() {
        assert!((gev_cdf(0.0, 0.0) - E_INV).abs() < 1e-16);
        assert!((gev_cdf(1.0, 0.0) - E_INV).abs() < 1e-16);
        assert!((gev_cdf(0.0, 2.0) - gev_cdf(1e-10, 2.0)).abs() < 1e-9);
    }

    #[test]
    fn cdf_beyond_support_edges() {
        assert_eq!(gev_cdf(0.5, -3.0), 0.0);
        assert_eq!(gev_cdf(-0.5, 3.0), 1.0);
        assert_eq!(gev_sf(-0.5, 3.0), 0.0);
        assert_eq!(gev_logpdf(0.5, -2.5), f64::NEG_INFINITY);
    }

    #[test]
    fn series_branch_is_continuous() {
        // Crossing the threshold must only move the value by the slope in γ.
        let check = |f: &dyn Fn(f64) -> f64, tol: f64| {
            let slope = (f(1e-6) - f(-1e-6)) / 2e-6;
            for &(g1, g2) in &[(0.99e-8, 1.01e-8), (-0.99e-8, -1.01e-8)] {
                let jump = f(g2) - f(g1) - slope * (g2 - g1);
                assert!(jump.abs() < tol, "{g1} -> {g2}: {jump}");
            }
        };
        for &x in &[-3.0, -1.0, 0.0, 0.5, 2.0, 7.0] {
            check(&|g| gev_cdf(g, x), 1e-14);
            check(&|g| gev_logpdf(g, x), 1e-12);
        }
    }

    #[test]
    fn logpdf_examples() {
        assert_eq!(gev_logpdf(0.0, 0.0), -1.0);
        let expect = -2.0 - (-2.0f64).exp();
        assert!((gev_logpdf(0.0, 2.0) - expect).abs() < 1e-15);
        assert!((expect + 2.135_335_283_236_613).abs() < 1e-15);
    }

    #[test]
    fn logpdf_matches_derivative_of_cdf() {
        for &g in &[-0.4, 0.0, 0.3] {
            for &x in &[-1.0, 0.0, 1.0, 1.5] {
                let h = 1e-5;
                let fd = (gev_cdf(g, x + h) - gev_cdf(g, x - h)) / (2.0 * h);
                assert!((fd - gev_logpdf(g, x).exp()).abs() < 1e-7, "g={g} x={x}");
            }
        }
    }

    #[test]
    fn quantile_examples() {
        assert!(gev_quantile(0.0, E_INV).unwrap().abs() < 1e-15);
        let q = gev_quantile(0.0, 0.9).unwrap();
        assert!((q - 2.250_367_327_312_445_3).abs() < 1e-12, "{q}");
        let q = gev_quantile(0.0, 1.0 - 1e-6).unwrap();
        assert!((q - 13.815_510_057_964_066).abs() < 1e-6, "{q}");
        let q = gev_upper_quantile(0.0, 1e-6).unwrap();
        assert!((q - 13.815_510_057_964_066).abs() < 1e-12, "{q}");
    }

    #[test]
    fn quantile_rejects_endpoints() {
        assert!(gev_quantile(0.0, 0.0).is_err());
        assert!(gev_quantile(0.2, 1.0).is_err());
        assert!(gev_upper_quantile(0.0, 1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &g in &[-0.5, -0.1, 0.0, 1e-9, 0.2, 0.7] {
            for &u in &[1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
                let x = gev_quantile(g, u).unwrap();
                assert!((gev_cdf(g, x) - u).abs() < 1e-10, "g={g} u={u}");
            }
        }
    }

    #[test]
    fn cdf_is_monotone_on_grid() {
        for &g in &[-0.5, 0.0, 0.5] {
            let mut prev = 0.0;
            for k in 0..1000 {
                let x = -5.0 + 15.0 * k as f64 / 999.0;
                let c = gev_cdf(g, x);
                assert!(c >= prev, "g={g} x={x}");
                prev = c;
            }
        }
    }

    #[test]
    fn cdf_converges_to_gumbel_linearly_in_shape() {
        let sup = |g: f64| {
            (0..1000)
                .map(|k| -3.0 + 13.0 * k as f64 / 999.0)
                .map(|x| (gev_cdf(g, x) - gev_cdf(0.0, x)).abs())
                .fold(0.0, f64::max)
        };
        let c = sup(1e-2) / 1e-2;
        assert!(c > 0.0 && c < 10.0);
        for &g in &[1e-3, 1e-5] {
            assert!(sup(g) < 1.05 * c * g, "g = {g}");
        }
        assert!(sup(1e-5) < 1.01e-2 * sup(1e-3));
    }

    #[test]
    fn h_hat_examples() {
        assert_eq!(h_hat(0.0, -1.0, 0.0).unwrap(), 0.0);
        assert_eq!(h_hat(0.0, 0.0, 2.0).unwrap(), 2.0);
        assert!((h_hat(0.0, -1.0, 1.0).unwrap() - E_INV).abs() < 1e-15);
    }

    #[test]
    fn numeric_h_hat_reproduces_closed_forms() {
        for k in 0..=28 {
            let x = -2.0 + 0.25 * k as f64;
            let exact = (-x).exp() + x - 1.0;
            let n = h_hat_numeric(0.0, -1.0, x).unwrap();
            assert!((n - exact).abs() < 1e-7, "rho=-1 x={x}: {n} vs {exact}");
            let n = h_hat_numeric(0.0, 0.0, x).unwrap();
            assert!((n - 0.5 * x * x).abs() < 1e-7, "rho=0 x={x}");
        }
    }

    #[test]
    fn h_hat_general_branches() {
        // γ = 0.5, ρ = -1: H(y) = ∫_0^y e^{u/2}(1 - e^{-u}) du
        //                       = 2(e^{y/2} - 1) + 2(e^{-y/2} - 1).
        let x = 1.3;
        let y = reduced_variate(0.5, x).unwrap();
        let exact = 2.0 * (0.5 * y).exp_m1() + 2.0 * (-0.5 * y).exp_m1();
        assert!((h_hat(0.5, -1.0, x).unwrap() - exact).abs() < 1e-7);
        // γ = -0.5, ρ = -1: H(y) = -∫_y^∞ e^{-u/2}(1 - e^{-u}) du
        //                        = -(2 e^{-y/2} - (2/3) e^{-3y/2}).
        let x = 0.4;
        let y = reduced_variate(-0.5, x).unwrap();
        let exact = -(2.0 * (-0.5 * y).exp() - 2.0 / 3.0 * (-1.5 * y).exp());
        let got = h_hat(-0.5, -1.0, x).unwrap();
        assert!((got - exact).abs() < 1e-7, "{got} vs {exact}");
    }

    #[test]
    fn h_hat_divergent_integral_is_an_error() {
        assert!(matches!(h_hat(-0.2, 0.5, 0.0), Err(Error::Integration(_))));
    }
}
