//! Special functions backing the source laws.
//!
//! `erfc` comes from `libm`, the inverse error function seed and `ln_gamma`
//! from `statrs`; the regularized
//! incomplete gamma pair is evaluated here with a power series below the
//! transition point and a Lentz continued fraction above it, so that the
//! upper tail keeps full relative accuracy.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use statrs::function::erf;
pub use statrs::function::gamma::ln_gamma;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_TERMS: usize = 10_000;

/// Logarithm of the common prefactor `x^a e^{-x} / Γ(a)`.
fn ln_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

/// Series sum `Σ x^k / (a (a+1) ... (a+k))`; `P(a, x) = prefactor * sum`.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum
}

/// Continued fraction for `Q(a, x) / prefactor` (modified Lentz).
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < a + 1.0 {
        (ln_prefactor(a, x).exp() * lower_series(a, x)).min(1.0)
    } else {
        1.0 - gamma_q(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p(a, x)
    } else {
        (ln_prefactor(a, x) + upper_fraction(a, x).ln()).exp()
    }
}

/// `ln P(a, x)` without underflow in the lower tail.
pub fn ln_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        ln_prefactor(a, x) + lower_series(a, x).ln()
    } else {
        (-gamma_q(a, x)).ln_1p()
    }
}

/// `ln Q(a, x)` without underflow in the upper tail.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        (-gamma_p(a, x)).ln_1p()
    } else {
        ln_prefactor(a, x) + upper_fraction(a, x).ln()
    }
}

/// Inverse of `P(a, ·)` (when `upper` is false) or `Q(a, ·)` (when true).
///
/// Safeguarded Newton iteration on the logarithm of whichever tail is being
/// matched, with a bisection fallback inside a maintained bracket.
pub fn gamma_inv(a: f64, prob: f64, upper: bool) -> f64 {
    let target = prob.ln();
    let ln_tail = |x: f64| {
        if upper {
            ln_gamma_q(a, x)
        } else {
            ln_gamma_p(a, x)
        }
    };
    // g(x) = ln_tail(x) - target is increasing for P and decreasing for Q.
    let sign = if upper { -1.0 } else { 1.0 };
    let g = |x: f64| sign * (ln_tail(x) - target);

    // Wilson-Hilferty start.
    let z = if upper {
        normal_isf(prob)
    } else {
        -normal_isf(prob)
    };
    let wh = a * (1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt())).powi(3);
    let mut x = if wh > 0.0 && wh.is_finite() {
        wh
    } else if upper {
        (-target).max(1e-3)
    } else {
        (prob * (ln_gamma(a + 1.0)).exp()).powf(1.0 / a).max(1e-300)
    };

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..400 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        // d ln_tail / dx = ± density / tail
        let ln_density = (a - 1.0) * x.ln() - x - ln_gamma(a);
        let slope = (ln_density - ln_tail(x)).exp();
        let mut next = x - gx / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * x.max(1.0)
            };
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Φ(x)`, accurate for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile, `Φ^{-1}(p) = -√2 erfc^{-1}(2p)`, polished by
/// Newton steps on whichever tail carries the relative information.
pub fn normal_quantile(p: f64) -> f64 {
    if p > 0.5 {
        -polish_lower_tail(erfc_seed(1.0 - p), 1.0 - p)
    } else {
        polish_lower_tail(erfc_seed(p), p)
    }
}

/// Inverse survival function: `x` with `1 - Φ(x) = q`.
pub fn normal_isf(q: f64) -> f64 {
    -normal_quantile(q)
}

fn erfc_seed(p: f64) -> f64 {
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// Newton refinement of `x = Φ^{-1}(p)` for `x ≤ 0`, done in log space.
fn polish_lower_tail(mut x: f64, p: f64) -> f64 {
    let target = p.ln();
    for _ in 0..3 {
        let cdf = normal_cdf(x);
        if cdf <= 0.0 {
            break;
        }
        let step = (cdf.ln() - target) * cdf / normal_pdf(x);
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}
