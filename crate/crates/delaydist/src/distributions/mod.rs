//! Parametric delay-distribution families.
//!
//! A delay distribution is one of four families (gamma, lognormal, Weibull,
//! normal) with natural parameters, delay measured in days. Gamma, lognormal
//! and Weibull live on [0, ∞); normal is the family offered for delays that
//! can be negative (serial intervals under pre-symptomatic transmission).
//!
//! Everything here is immutable and pure; sampling takes an explicit seed so
//! concurrent callers can use disjoint streams.

mod convert;
mod tilt;

pub use convert::{params_from_summary, summary_from_params, SummaryStats};
pub use tilt::{tilt, TiltedDensity};

use crate::error::{DelayError, Result};
use crate::numeric::special::{norm_cdf, norm_pdf, norm_quantile};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Family tag without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gamma,
    Lognormal,
    Weibull,
    Normal,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::Gamma,
        FamilyKind::Lognormal,
        FamilyKind::Weibull,
        FamilyKind::Normal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Gamma => "gamma",
            FamilyKind::Lognormal => "lognormal",
            FamilyKind::Weibull => "weibull",
            FamilyKind::Normal => "normal",
        }
    }

    /// True for families supported on [0, ∞).
    pub fn positive_support(self) -> bool {
        !matches!(self, FamilyKind::Normal)
    }

    /// Number of natural parameters (2 for every shipped family).
    pub fn dim(self) -> usize {
        2
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(FamilyKind::Gamma),
            "lognormal" => Ok(FamilyKind::Lognormal),
            "weibull" => Ok(FamilyKind::Weibull),
            "normal" => Ok(FamilyKind::Normal),
            other => Err(format!(
                "unknown family '{other}' (expected gamma, lognormal, weibull or normal)"
            )),
        }
    }
}

/// A parametric delay distribution with validated natural parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayFamily {
    Gamma { shape: f64, rate: f64 },
    Lognormal { meanlog: f64, sdlog: f64 },
    Weibull { shape: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
}

fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DelayError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DelayError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

impl DelayFamily {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(DelayFamily::Gamma {
            shape: require_positive("shape", shape)?,
            rate: require_positive("rate", rate)?,
        })
    }

    pub fn lognormal(meanlog: f64, sdlog: f64) -> Result<Self> {
        Ok(DelayFamily::Lognormal {
            meanlog: require_finite("meanlog", meanlog)?,
            sdlog: require_positive("sdlog", sdlog)?,
        })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Ok(DelayFamily::Weibull {
            shape: require_positive("shape", shape)?,
            scale: require_positive("scale", scale)?,
        })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Ok(DelayFamily::Normal {
            mean: require_finite("mean", mean)?,
            sd: require_positive("sd", sd)?,
        })
    }

    /// Builds a distribution from its family tag and natural parameters in
    /// the tag's canonical order (shape/rate, meanlog/sdlog, shape/scale,
    /// mean/sd).
    pub fn from_params(kind: FamilyKind, p1: f64, p2: f64) -> Result<Self> {
        match kind {
            FamilyKind::Gamma => Self::gamma(p1, p2),
            FamilyKind::Lognormal => Self::lognormal(p1, p2),
            FamilyKind::Weibull => Self::weibull(p1, p2),
            FamilyKind::Normal => Self::normal(p1, p2),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            DelayFamily::Gamma { .. } => FamilyKind::Gamma,
            DelayFamily::Lognormal { .. } => FamilyKind::Lognormal,
            DelayFamily::Weibull { .. } => FamilyKind::Weibull,
            DelayFamily::Normal { .. } => FamilyKind::Normal,
        }
    }

    /// Natural parameters in canonical order.
    pub fn params(&self) -> [f64; 2] {
        match *self {
            DelayFamily::Gamma { shape, rate } => [shape, rate],
            DelayFamily::Lognormal { meanlog, sdlog } => [meanlog, sdlog],
            DelayFamily::Weibull { shape, scale } => [shape, scale],
            DelayFamily::Normal { mean, sd } => [mean, sd],
        }
    }

    /// Lower end of the support (0 for positive families, -∞ for normal).
    pub fn support_lower(&self) -> f64 {
        if self.kind().positive_support() {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            DelayFamily::Gamma { shape, rate } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    match shape.partial_cmp(&1.0).unwrap() {
                        std::cmp::Ordering::Less => f64::INFINITY,
                        std::cmp::Ordering::Equal => rate,
                        std::cmp::Ordering::Greater => 0.0,
                    }
                } else {
                    self.ln_pdf(x).exp()
                }
            }
            DelayFamily::Lognormal { .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    self.ln_pdf(x).exp()
                }
            }
            DelayFamily::Weibull { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    match shape.partial_cmp(&1.0).unwrap() {
                        std::cmp::Ordering::Less => f64::INFINITY,
                        std::cmp::Ordering::Equal => 1.0 / scale,
                        std::cmp::Ordering::Greater => 0.0,
                    }
                } else {
                    self.ln_pdf(x).exp()
                }
            }
            DelayFamily::Normal { mean, sd } => norm_pdf((x - mean) / sd) / sd,
        }
    }

    /// Log-density at `x`; −∞ outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            DelayFamily::Gamma { shape, rate } => {
                if x < 0.0 || (x == 0.0 && shape > 1.0) {
                    f64::NEG_INFINITY
                } else if x == 0.0 {
                    self.pdf(0.0).ln()
                } else {
                    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
                }
            }
            DelayFamily::Lognormal { meanlog, sdlog } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let z = (x.ln() - meanlog) / sdlog;
                    -0.5 * z * z - x.ln() - sdlog.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                }
            }
            DelayFamily::Weibull { shape, scale } => {
                if x < 0.0 || (x == 0.0 && shape > 1.0) {
                    f64::NEG_INFINITY
                } else if x == 0.0 {
                    self.pdf(0.0).ln()
                } else {
                    let z = x / scale;
                    shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(shape)
                }
            }
            DelayFamily::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DelayFamily::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            DelayFamily::Lognormal { meanlog, sdlog } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - meanlog) / sdlog)
                }
            }
            DelayFamily::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            DelayFamily::Normal { mean, sd } => norm_cdf((x - mean) / sd),
        }
    }

    /// Quantile function for p in (0, 1).
    ///
    /// Closed form for lognormal, Weibull and normal; bracketed bisection on
    /// the CDF for gamma, run to floating-point exhaustion (well inside the
    /// 1e-9-day contract).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DelayError::InvalidParameter {
                name: "p",
                value: p,
                reason: "quantile probability must lie in (0,1)",
            });
        }
        Ok(match *self {
            DelayFamily::Gamma { .. } => {
                let mut hi = self.mean() + self.sd().max(1.0);
                let mut guard = 0;
                while self.cdf(hi) < p {
                    hi *= 2.0;
                    guard += 1;
                    if guard > 200 {
                        return Err(DelayError::RootFind(
                            "gamma quantile bracket expansion failed".into(),
                        ));
                    }
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            DelayFamily::Lognormal { meanlog, sdlog } => (meanlog + sdlog * norm_quantile(p)).exp(),
            DelayFamily::Weibull { shape, scale } => {
                scale * (-(-p).ln_1p()).powf(1.0 / shape)
            }
            DelayFamily::Normal { mean, sd } => mean + sd * norm_quantile(p),
        })
    }

    /// Closed-form mean.
    pub fn mean(&self) -> f64 {
        match *self {
            DelayFamily::Gamma { shape, rate } => shape / rate,
            DelayFamily::Lognormal { meanlog, sdlog } => (meanlog + 0.5 * sdlog * sdlog).exp(),
            DelayFamily::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            DelayFamily::Normal { mean, .. } => mean,
        }
    }

    /// Closed-form standard deviation.
    pub fn sd(&self) -> f64 {
        match *self {
            DelayFamily::Gamma { shape, rate } => shape.sqrt() / rate,
            DelayFamily::Lognormal { meanlog, sdlog } => {
                (meanlog + 0.5 * sdlog * sdlog).exp() * (sdlog * sdlog).exp_m1().sqrt()
            }
            DelayFamily::Weibull { shape, .. } => {
                // mean * cv, with cv² computed on the log scale so that large
                // shapes (tiny cv) keep full relative precision.
                self.mean() * weibull_cv2(shape).sqrt()
            }
            DelayFamily::Normal { sd, .. } => sd,
        }
    }

    /// Inverse-CDF sampling: `n` draws mapped through `quantile` from a
    /// seeded uniform stream, so equal seeds give equal samples.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    /// Same as [`sample`](Self::sample) but drawing from a caller-owned
    /// stream (parallel callers use disjoint streams).
    pub fn sample_with<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>();
                // random() lies in [0,1); nudge exact zeros into the open interval.
                let u = u.max(f64::MIN_POSITIVE);
                self.quantile(u).expect("uniform draw is inside (0,1)")
            })
            .collect()
    }
}

/// Weibull squared coefficient of variation as a function of shape,
/// `Γ(1+2/k)/Γ(1+1/k)² − 1`, evaluated as expm1 of log-gammas.
pub(crate) fn weibull_cv2(shape: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 / shape) - 2.0 * ln_gamma(1.0 + 1.0 / shape)).exp_m1()
}

// --- serialization: {"family": "...", "params": {name: value}} -------------

#[derive(Serialize, Deserialize)]
struct DistRecord {
    family: FamilyKind,
    params: BTreeMap<String, f64>,
}

impl Serialize for DelayFamily {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let [p1, p2] = self.params();
        let (n1, n2) = param_names(self.kind());
        let mut params = BTreeMap::new();
        params.insert(n1.to_string(), p1);
        params.insert(n2.to_string(), p2);
        DistRecord {
            family: self.kind(),
            params,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DelayFamily {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let rec = DistRecord::deserialize(deserializer)?;
        let (n1, n2) = param_names(rec.family);
        let get = |name: &str| {
            rec.params.get(name).copied().ok_or_else(|| {
                D::Error::custom(format!("missing parameter '{name}' for family {}", rec.family))
            })
        };
        let p1 = get(n1)?;
        let p2 = get(n2)?;
        for key in rec.params.keys() {
            if key != n1 && key != n2 {
                return Err(D::Error::custom(format!(
                    "unexpected parameter '{key}' for family {}",
                    rec.family
                )));
            }
        }
        DelayFamily::from_params(rec.family, p1, p2).map_err(D::Error::custom)
    }
}

/// Canonical parameter names used in configs and reports.
pub fn param_names(kind: FamilyKind) -> (&'static str, &'static str) {
    match kind {
        FamilyKind::Gamma => ("shape", "rate"),
        FamilyKind::Lognormal => ("meanlog", "sdlog"),
        FamilyKind::Weibull => ("shape", "scale"),
        FamilyKind::Normal => ("mean", "sd"),
    }
}

#[cfg(test)]
mod tests;
