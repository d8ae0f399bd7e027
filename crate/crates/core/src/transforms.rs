//! Monotone transformation families `T(·|β)` and the curvature heuristic that
//! picks one from a sample of block maxima.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `T(x) = x`.
    Identity,
    /// `T(x) = x^β` on `x > 0`.
    Power,
    /// `T(x) = (ln x)^β` on `x > 1`.
    LogPower,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Identity => "identity",
            FamilyKind::Power => "power",
            FamilyKind::LogPower => "log-power",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(FamilyKind::Identity),
            "power" => Ok(FamilyKind::Power),
            "log-power" | "logpower" => Ok(FamilyKind::LogPower),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform family {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformFamily {
    pub kind: FamilyKind,
    pub beta: f64,
}

impl TransformFamily {
    pub fn new(kind: FamilyKind, beta: f64) -> Result<Self> {
        if kind != FamilyKind::Identity && !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { kind, beta })
    }

    pub fn identity() -> Self {
        Self {
            kind: FamilyKind::Identity,
            beta: 1.0,
        }
    }

    pub fn power(beta: f64) -> Result<Self> {
        Self::new(FamilyKind::Power, beta)
    }

    pub fn log_power(beta: f64) -> Result<Self> {
        Self::new(FamilyKind::LogPower, beta)
    }

    pub fn in_domain(&self, x: f64) -> bool {
        match self.kind {
            FamilyKind::Identity => x.is_finite(),
            FamilyKind::Power => x > 0.0 && x.is_finite(),
            FamilyKind::LogPower => x > 1.0 && x.is_finite(),
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "transform",
                value: x,
            })
        }
    }

    /// `(T(x), T'(x))`.
    pub fn forward(&self, x: f64) -> Result<(f64, f64)> {
        self.check(x)?;
        let b = self.beta;
        Ok(match self.kind {
            FamilyKind::Identity => (x, 1.0),
            FamilyKind::Power => {
                let y = x.powf(b);
                (y, b * y / x)
            }
            FamilyKind::LogPower => {
                let l = x.ln();
                let y = l.powf(b);
                (y, b * y / (l * x))
            }
        })
    }

    /// `(T(x), ln T'(x))`, the pair the likelihood consumes.
    pub fn forward_log(&self, x: f64) -> Result<(f64, f64)> {
        self.check(x)?;
        let b = self.beta;
        Ok(match self.kind {
            FamilyKind::Identity => (x, 0.0),
            FamilyKind::Power => {
                let lx = x.ln();
                ((b * lx).exp(), b.ln() + (b - 1.0) * lx)
            }
            FamilyKind::LogPower => {
                let l = x.ln();
                let ll = l.ln();
                ((b * ll).exp(), b.ln() + (b - 1.0) * ll - l)
            }
        })
    }

    /// Infimum of the range of `T`.
    pub fn range_lower(&self) -> f64 {
        match self.kind {
            FamilyKind::Identity => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    /// `T^{-1}(y)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y <= self.range_lower() {
            return Err(Error::Domain {
                what: "transform inverse",
                value: y,
            });
        }
        Ok(match self.kind {
            FamilyKind::Identity => y,
            FamilyKind::Power => y.powf(self.beta.recip()),
            FamilyKind::LogPower => y.powf(self.beta.recip()).exp(),
        })
    }
}

impl fmt::Display for TransformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FamilyKind::Identity => write!(f, "identity"),
            kind => write!(f, "{kind}(beta = {})", self.beta),
        }
    }
}

/// Shape of the empirical tail on one plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curvature {
    Straight,
    CurvesDown,
    CurvesUp,
}

impl Curvature {
    fn from_t(t: f64) -> Self {
        if t < -CURVATURE_T {
            Curvature::CurvesDown
        } else if t > CURVATURE_T {
            Curvature::CurvesUp
        } else {
            Curvature::Straight
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnosis {
    /// Semilog plot straight: the sample already looks exponential-tailed.
    Identity,
    /// Semilog plot curves down: a power with `β > 1`.
    PowerAboveOne,
    /// Semilog curves up and loglog curves down: a power with `β < 1` or a
    /// power of the logarithm.
    PowerBelowOneOrLogPower,
    /// Semilog curves up but the log plot is unavailable (non-positive data).
    PowerBelowOne,
    /// Loglog plot straight or curving up: heavier than any Gumbel-domain law.
    OutOfScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySuggestion {
    pub diagnosis: Diagnosis,
    /// Preferred family, `None` when out of scope.
    pub family: Option<FamilyKind>,
    /// All families compatible with the diagnosis.
    pub candidates: Vec<FamilyKind>,
    pub semilog_t: f64,
    pub semilog: Curvature,
    /// Absent when some value in the analysed range is not positive.
    pub loglog_t: Option<f64>,
    pub loglog: Option<Curvature>,
}

pub const MIN_SUGGEST_SAMPLE: usize = 50;
const CURVATURE_T: f64 = 2.0;
const DROPPED_TOP: usize = 5;

/// Reads the curvature of the empirical tail on semilog and loglog axes.
///
/// The upper half of the order statistics, minus the top five, is regressed
/// against the expected standard-exponential order statistics `z` with a
/// quadratic term. Rényi's representation turns the order statistics into
/// independent normalized spacings `(m - k)(x_(k) - x_(k-1))`, which are
/// regressed on an intercept and the matching spacings of `z²`; the t-statistic
/// of the `z²` coefficient measures curvature.
pub fn suggest_family(sample: &[f64]) -> Result<FamilySuggestion> {
    let m = sample.len();
    if m < MIN_SUGGEST_SAMPLE {
        return Err(Error::InsufficientData {
            needed: MIN_SUGGEST_SAMPLE,
            got: m,
        });
    }
    if let Some((index, &value)) = sample.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::TransformDomain { index, value });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = m / 2;
    let hi = m - 1 - DROPPED_TOP;

    let semilog_t = curvature_t(&sorted, lo, hi)?;
    let loglog_t = if sorted[lo] > 0.0 {
        let logs: Vec<f64> = sorted
            .iter()
            .map(|&v| v.max(f64::MIN_POSITIVE).ln())
            .collect();
        Some(curvature_t(&logs, lo, hi)?)
    } else {
        None
    };
    let semilog = Curvature::from_t(semilog_t);
    let loglog = loglog_t.map(Curvature::from_t);

    let (diagnosis, family, candidates) = match (semilog, loglog) {
        (Curvature::Straight, _) => (
            Diagnosis::Identity,
            Some(FamilyKind::Identity),
            vec![FamilyKind::Identity],
        ),
        (Curvature::CurvesDown, _) => (
            Diagnosis::PowerAboveOne,
            Some(FamilyKind::Power),
            vec![FamilyKind::Power],
        ),
        (Curvature::CurvesUp, Some(Curvature::CurvesDown)) => (
            Diagnosis::PowerBelowOneOrLogPower,
            Some(FamilyKind::LogPower),
            vec![FamilyKind::LogPower, FamilyKind::Power],
        ),
        (Curvature::CurvesUp, None) => (
            Diagnosis::PowerBelowOne,
            Some(FamilyKind::Power),
            vec![FamilyKind::Power],
        ),
        (Curvature::CurvesUp, Some(_)) => (Diagnosis::OutOfScope, None, vec![]),
    };
    Ok(FamilySuggestion {
        diagnosis,
        family,
        candidates,
        semilog_t,
        semilog,
        loglog_t,
        loglog,
    })
}

/// t-statistic of the quadratic coefficient for order statistics `lo..=hi`
/// of the ascending sample `v`.
fn curvature_t(v: &[f64], lo: usize, hi: usize) -> Result<f64> {
    let m = v.len();
    // z[i] = E[E_(i)] for the i-th (1-based) standard exponential order statistic.
    let mut z = vec![0.0; m + 1];
    for i in 1..=m {
        z[i] = z[i - 1] + 1.0 / (m - i + 1) as f64;
    }
    let mut rows = Vec::with_capacity(hi - lo);
    for k in lo + 1..=hi {
        let w = (m - k) as f64;
        let d = w * (v[k] - v[k - 1]);
        let q = w * (z[k + 1] * z[k + 1] - z[k] * z[k]);
        rows.push((q, d));
    }
    let n = rows.len() as f64;
    let mean_q = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let mean_d = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let sqq: f64 = rows.iter().map(|r| (r.0 - mean_q).powi(2)).sum();
    let sqd: f64 = rows.iter().map(|r| (r.0 - mean_q) * (r.1 - mean_d)).sum();
    if sqq <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let slope = sqd / sqq;
    let intercept = mean_d - slope * mean_q;
    let rss: f64 = rows
        .iter()
        .map(|&(q, d)| (d - intercept - slope * q).powi(2))
        .sum();
    let se = (rss / (n - 2.0) / sqq).sqrt();
    if se == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(slope / se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn forward_examples() {
        let (y, d) = TransformFamily::power(2.0).unwrap().forward(3.0).unwrap();
        assert!(close(y, 9.0, 1e-15) && close(d, 6.0, 1e-15));
        let (y, d) = TransformFamily::log_power(2.0).unwrap().forward(E).unwrap();
        assert!(close(y, 1.0, 1e-15) && close(d, 2.0 / E, 1e-15));
        assert_eq!(
            TransformFamily::identity().forward(-4.2).unwrap(),
            (-4.2, 1.0)
        );
    }

    #[test]
    fn forward_rejects_points_outside_domain() {
        let err = TransformFamily::power(2.0)
            .unwrap()
            .forward(0.0)
            .unwrap_err();
        assert!(matches!(err, Error::Domain { value, .. } if value == 0.0));
        assert!(TransformFamily::log_power(1.0)
            .unwrap()
            .forward(0.5)
            .is_err());
        assert!(TransformFamily::log_power(1.0)
            .unwrap()
            .forward(1.0)
            .is_err());
    }

    #[test]
    fn inverse_examples() {
        assert!(close(
            TransformFamily::power(2.0).unwrap().inverse(9.0).unwrap(),
            3.0,
            1e-15
        ));
        assert!(close(
            TransformFamily::log_power(2.0)
                .unwrap()
                .inverse(1.0)
                .unwrap(),
            E,
            1e-15
        ));
        let t = TransformFamily::power(1.7).unwrap();
        assert!(close(
            t.inverse(t.forward(5.0).unwrap().0).unwrap(),
            5.0,
            1e-10
        ));
        assert!(t.inverse(-1.0).is_err());
        assert!(t.inverse(0.0).is_err());
    }

    #[test]
    fn invalid_beta_is_rejected() {
        assert!(TransformFamily::power(0.0).is_err());
        assert!(TransformFamily::log_power(-1.0).is_err());
        assert!(TransformFamily::new(FamilyKind::Identity, 0.0).is_ok());
    }

    #[test]
    fn log_derivative_agrees_with_forward() {
        for fam in [
            TransformFamily::power(0.4).unwrap(),
            TransformFamily::power(3.0).unwrap(),
            TransformFamily::log_power(2.2).unwrap(),
        ] {
            for &x in &[1.5, 7.0, 90.0] {
                let (y, d) = fam.forward(x).unwrap();
                let (yl, ld) = fam.forward_log(x).unwrap();
                assert!(close(y, yl, 1e-13));
                assert!(close(d.ln(), ld, 1e-12) || (d.ln() - ld).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn too_small_sample_is_rejected() {
        let s: Vec<f64> = (0..49).map(f64::from).collect();
        assert!(matches!(
            suggest_family(&s),
            Err(Error::InsufficientData {
                needed: 50,
                got: 49
            })
        ));
    }

    fn family_strategy() -> impl Strategy<Value = TransformFamily> {
        (0.3f64..5.0, prop::bool::ANY).prop_map(|(b, log)| {
            if log {
                TransformFamily::log_power(b).unwrap()
            } else {
                TransformFamily::power(b).unwrap()
            }
        })
    }

    fn domain_point(fam: &TransformFamily, u: f64) -> f64 {
        match fam.kind {
            FamilyKind::LogPower => 1.1 + u * 98.9,
            _ => 0.1 + u * 99.9,
        }
    }

    proptest! {
        #[test]
        fn strictly_increasing(fam in family_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
            prop_assume!(u != v);
            let (x1, x2) = (domain_point(&fam, u.min(v)), domain_point(&fam, u.max(v)));
            prop_assume!(x1 < x2);
            prop_assert!(fam.forward(x1).unwrap().0 < fam.forward(x2).unwrap().0);
        }

        #[test]
        fn derivative_matches_finite_difference(fam in family_strategy(), u in 0.0f64..1.0) {
            let x = domain_point(&fam, u);
            let d = fam.forward(x).unwrap().1;
            let edge = if fam.kind == FamilyKind::LogPower { 1.0 } else { 0.0 };
            let h = 1e-5 * (x - edge);
            let fd = (fam.forward(x + h).unwrap().0 - fam.forward(x - h).unwrap().0) / (2.0 * h);
            prop_assert!(close(d, fd, 1e-6), "x = {x}: {d} vs {fd}");
        }

        #[test]
        fn round_trips(fam in family_strategy(), u in 0.0f64..1.0) {
            let x = domain_point(&fam, u);
            let y = fam.forward(x).unwrap().0;
            prop_assert!(close(fam.inverse(y).unwrap(), x, 1e-10));
            let back = fam.forward(fam.inverse(y).unwrap()).unwrap().0;
            prop_assert!(close(back, y, 1e-10));
        }
    }
}
