//! Source laws `F` whose block maxima are studied.
//!
//! Every law exposes its cdf, upper tail, log-cdf, density and first density
//! derivative, quantile and inverse survival function. The convergence
//! machinery only needs the [`ContinuousLaw`] trait, so user-defined laws can
//! be plugged in next to the built-in [`DistributionSpec`] catalogue.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// A continuous law on an open interval of the real line.
pub trait ContinuousLaw {
    /// Open support `(lower, upper)`; endpoints may be infinite.
    fn support(&self) -> (f64, f64);

    fn cdf(&self, x: f64) -> f64;

    /// Upper tail `1 - F(x)`.
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// `ln F(x)`, accurate when `F(x)` is close to one.
    fn ln_cdf(&self, x: f64) -> f64 {
        let s = self.sf(x);
        if s < 0.5 {
            (-s).ln_1p()
        } else {
            self.cdf(x).ln()
        }
    }

    /// `F'(x)` for `order == 0`, `F''(x)` for `order == 1`.
    fn density(&self, x: f64, order: u8) -> Result<f64>;

    /// `F^{-1}(p)` for `p ∈ (0, 1)`.
    fn quantile(&self, p: f64) -> Result<f64>;

    /// Inverse survival function: `x` with `1 - F(x) = q`.
    fn upper_quantile(&self, q: f64) -> Result<f64> {
        check_probability("upper quantile", q)?;
        self.quantile(1.0 - q)
    }

    /// `x` with `-ln F(x) = s`, i.e. `F^{-1}(e^{-s})`.
    ///
    /// Small `s` is routed through the upper tail so that `1 - e^{-s}` keeps
    /// its relative precision.
    fn quantile_of_neg_ln_cdf(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain {
                what: "quantile of -ln F",
                value: s,
            });
        }
        if s < std::f64::consts::LN_2 {
            self.upper_quantile(-(-s).exp_m1())
        } else {
            self.quantile((-s).exp())
        }
    }

    /// `count` draws by inversion of uniform variates from `rng`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>>
    where
        Self: Sized,
    {
        (0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.upper_quantile(u)
            })
            .collect()
    }
}

pub(crate) fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value: p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    Exponential,
    Normal,
    LogNormal,
    /// `F(x) = 1 - exp(-x^α)`.
    Rayleigh,
    /// Unit-scale Gamma with shape `a`.
    Gamma,
    Gumbel,
    /// Disk area, `P(A < a) = 1 - e^{-a}`.
    DiskArea,
    /// Disk radius, `P(R < r) = 1 - e^{-π r²}`.
    DiskRadius,
}

/// One of the built-in source laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    kind: DistributionKind,
    shape: f64,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, shape: f64) -> Result<Self> {
        match kind {
            DistributionKind::Rayleigh | DistributionKind::Gamma
                if !(shape > 0.0 && shape.is_finite()) =>
            {
                Err(Error::InvalidParameter {
                    name: "shape",
                    value: shape,
                    reason: "must be positive and finite",
                })
            }
            _ => Ok(Self { kind, shape }),
        }
    }

    pub fn exponential() -> Self {
        Self::unshaped(DistributionKind::Exponential)
    }

    pub fn normal() -> Self {
        Self::unshaped(DistributionKind::Normal)
    }

    pub fn lognormal() -> Self {
        Self::unshaped(DistributionKind::LogNormal)
    }

    pub fn gumbel() -> Self {
        Self::unshaped(DistributionKind::Gumbel)
    }

    pub fn disk_area() -> Self {
        Self::unshaped(DistributionKind::DiskArea)
    }

    pub fn disk_radius() -> Self {
        Self::unshaped(DistributionKind::DiskRadius)
    }

    pub fn rayleigh(alpha: f64) -> Result<Self> {
        Self::new(DistributionKind::Rayleigh, alpha)
    }

    pub fn gamma(shape: f64) -> Result<Self> {
        Self::new(DistributionKind::Gamma, shape)
    }

    fn unshaped(kind: DistributionKind) -> Self {
        Self { kind, shape: 1.0 }
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Shape parameter (`α` for Rayleigh, `a` for Gamma); 1 for other laws.
    pub fn shape(&self) -> f64 {
        self.shape
    }

    fn domain_check(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if x > lo && x < hi {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "density",
                value: x,
            })
        }
    }
}

impl ContinuousLaw for DistributionSpec {
    fn support(&self) -> (f64, f64) {
        use DistributionKind::*;
        match self.kind {
            Normal | Gumbel => (f64::NEG_INFINITY, f64::INFINITY),
            Exponential | LogNormal | Rayleigh | Gamma | DiskArea | DiskRadius => {
                (0.0, f64::INFINITY)
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        use DistributionKind::*;
        if x.is_nan() {
            return f64::NAN;
        }
        let (lo, _) = self.support();
        if x <= lo {
            return 0.0;
        }
        match self.kind {
            Exponential | DiskArea => -(-x).exp_m1(),
            Rayleigh => -(-x.powf(self.shape)).exp_m1(),
            DiskRadius => -(-PI * x * x).exp_m1(),
            Normal => special::normal_cdf(x),
            LogNormal => special::normal_cdf(x.ln()),
            Gamma => special::gamma_p(self.shape, x),
            Gumbel => (-(-x).exp()).exp(),
        }
    }

    fn sf(&self, x: f64) -> f64 {
        use DistributionKind::*;
        if x.is_nan() {
            return f64::NAN;
        }
        let (lo, _) = self.support();
        if x <= lo {
            return 1.0;
        }
        match self.kind {
            Exponential | DiskArea => (-x).exp(),
            Rayleigh => (-x.powf(self.shape)).exp(),
            DiskRadius => (-PI * x * x).exp(),
            Normal => special::normal_sf(x),
            LogNormal => special::normal_sf(x.ln()),
            Gamma => special::gamma_q(self.shape, x),
            Gumbel => -(-(-x).exp()).exp_m1(),
        }
    }

    fn ln_cdf(&self, x: f64) -> f64 {
        use DistributionKind::*;
        let (lo, _) = self.support();
        if x <= lo {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            Gumbel => -(-x).exp(),
            Gamma => special::ln_gamma_p(self.shape, x),
            Normal if x < 0.0 => special::normal_cdf(x).ln(),
            LogNormal if x < 1.0 => special::normal_cdf(x.ln()).ln(),
            _ => {
                let s = self.sf(x);
                if s < 0.5 {
                    (-s).ln_1p()
                } else {
                    self.cdf(x).ln()
                }
            }
        }
    }

    fn density(&self, x: f64, order: u8) -> Result<f64> {
        use DistributionKind::*;
        if order > 1 {
            return Err(Error::InvalidArgument(format!(
                "density order {order} is not supported (expected 0 or 1)"
            )));
        }
        self.domain_check(x)?;
        let (f, log_slope) = match self.kind {
            // log_slope = f'/f
            Exponential | DiskArea => ((-x).exp(), -1.0),
            Normal => (special::normal_pdf(x), -x),
            LogNormal => {
                let lx = x.ln();
                (special::normal_pdf(lx) / x, -(1.0 + lx) / x)
            }
            Rayleigh => {
                let a = self.shape;
                let xa = x.powf(a);
                (a * xa / x * (-xa).exp(), (a - 1.0) / x - a * xa / x)
            }
            Gamma => {
                let a = self.shape;
                let ln_f = (a - 1.0) * x.ln() - x - special::ln_gamma(a);
                (ln_f.exp(), (a - 1.0) / x - 1.0)
            }
            Gumbel => {
                let e = (-x).exp();
                ((-x - e).exp(), e - 1.0)
            }
            DiskRadius => (2.0 * PI * x * (-PI * x * x).exp(), 1.0 / x - 2.0 * PI * x),
        };
        Ok(if order == 0 { f } else { f * log_slope })
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        use DistributionKind::*;
        check_probability("quantile", p)?;
        Ok(match self.kind {
            Exponential | DiskArea => -(-p).ln_1p(),
            Rayleigh => (-(-p).ln_1p()).powf(1.0 / self.shape),
            DiskRadius => (-(-p).ln_1p() / PI).sqrt(),
            Normal => special::normal_quantile(p),
            LogNormal => special::normal_quantile(p).exp(),
            Gamma => {
                if p <= 0.5 {
                    special::gamma_inv(self.shape, p, false)
                } else {
                    special::gamma_inv(self.shape, 1.0 - p, true)
                }
            }
            Gumbel => -(-p.ln()).ln(),
        })
    }

    fn upper_quantile(&self, q: f64) -> Result<f64> {
        use DistributionKind::*;
        check_probability("upper quantile", q)?;
        Ok(match self.kind {
            Exponential | DiskArea => -q.ln(),
            Rayleigh => (-q.ln()).powf(1.0 / self.shape),
            DiskRadius => (-q.ln() / PI).sqrt(),
            Normal => special::normal_isf(q),
            LogNormal => special::normal_isf(q).exp(),
            Gamma => {
                if q <= 0.5 {
                    special::gamma_inv(self.shape, q, true)
                } else {
                    special::gamma_inv(self.shape, 1.0 - q, false)
                }
            }
            Gumbel => -(-(-q).ln_1p()).ln(),
        })
    }

    fn quantile_of_neg_ln_cdf(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain {
                what: "quantile of -ln F",
                value: s,
            });
        }
        match self.kind {
            DistributionKind::Gumbel => Ok(-s.ln()),
            _ if s < std::f64::consts::LN_2 => self.upper_quantile(-(-s).exp_m1()),
            _ => self.quantile((-s).exp()),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DistributionKind::*;
        match self.kind {
            Exponential => write!(f, "exponential"),
            Normal => write!(f, "normal"),
            LogNormal => write!(f, "lognormal"),
            Rayleigh => write!(f, "rayleigh:{}", self.shape),
            Gamma => write!(f, "gamma:{}", self.shape),
            Gumbel => write!(f, "gumbel"),
            DiskArea => write!(f, "disk-area"),
            DiskRadius => write!(f, "disk-radius"),
        }
    }
}

/// Parses descriptors such as `normal`, `rayleigh:2`, `gamma:3.5`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, shape) = match s.split_once(':') {
            Some((name, shape)) => {
                let shape: f64 = shape.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad shape in distribution descriptor {s:?}"))
                })?;
                (name.trim().to_string(), Some(shape))
            }
            None => (s.clone(), None),
        };
        let kind = match name.as_str() {
            "exponential" | "exp" => DistributionKind::Exponential,
            "normal" | "gaussian" => DistributionKind::Normal,
            "lognormal" | "log-normal" => DistributionKind::LogNormal,
            "rayleigh" => DistributionKind::Rayleigh,
            "gamma" => DistributionKind::Gamma,
            "gumbel" => DistributionKind::Gumbel,
            "disk-area" => DistributionKind::DiskArea,
            "disk-radius" => DistributionKind::DiskRadius,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown distribution {name:?}"
                )))
            }
        };
        match (kind, shape) {
            (DistributionKind::Rayleigh | DistributionKind::Gamma, Some(shape)) => {
                Self::new(kind, shape)
            }
            (DistributionKind::Rayleigh | DistributionKind::Gamma, None) => Err(
                Error::InvalidArgument(format!("{name} needs a shape, e.g. {name}:2")),
            ),
            (_, Some(_)) => Err(Error::InvalidArgument(format!(
                "{name} takes no shape parameter"
            ))),
            (_, None) => Ok(Self::unshaped(kind)),
        }
    }
}
