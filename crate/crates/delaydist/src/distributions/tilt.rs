//! Exponential tilting.
//!
//! Under constant exponential growth at rate r, the backward delay
//! distribution (cohorted by secondary event) is the forward density f
//! reweighted by e^{−r·x} and renormalized. Tilting is therefore both the
//! mathematical form of dynamical bias and the tool for correcting it:
//! fitting backward data uses the tilted CDF, and a published backward
//! estimate is mapped to the forward scale by tilting with −r.

use crate::distributions::{DelayFamily, SummaryStats};
use crate::error::{DelayError, Result};
use crate::numeric::quadrature::{integrate_positive_axis, integrate_positive_prefix, TailIntegral};

const REL_TOL: f64 = 1e-10;

/// A delay density reweighted by e^{−rate·x} and renormalized.
#[derive(Debug, Clone)]
pub struct TiltedDensity {
    base: DelayFamily,
    rate: f64,
    log_normalizer: f64,
    /// Set when the tilted density is itself a shipped family (gamma and
    /// normal close under tilting); numeric quadrature otherwise.
    closed: Option<DelayFamily>,
}

/// Tilts `dist` by `rate` (per day).
///
/// Gamma and normal tilt in closed form: Gamma(k, β) → Gamma(k, β + r) and
/// Normal(m, s) → Normal(m − r·s², s). Lognormal and Weibull normalizers are
/// integrated numerically; a normalizer that does not converge (e.g. any
/// lognormal with r < 0, whose tail beats every exponential) is an error.
pub fn tilt(dist: &DelayFamily, rate: f64) -> Result<TiltedDensity> {
    if rate == 0.0 {
        return Ok(TiltedDensity {
            base: *dist,
            rate,
            log_normalizer: 0.0,
            closed: Some(*dist),
        });
    }
    match *dist {
        DelayFamily::Gamma { shape, rate: beta } => {
            if beta + rate <= 0.0 {
                return Err(DelayError::DivergentNormalizer {
                    family: "gamma",
                    rate,
                });
            }
            Ok(TiltedDensity {
                base: *dist,
                rate,
                log_normalizer: shape * (beta.ln() - (beta + rate).ln()),
                closed: Some(DelayFamily::gamma(shape, beta + rate)?),
            })
        }
        DelayFamily::Normal { mean, sd } => Ok(TiltedDensity {
            base: *dist,
            rate,
            log_normalizer: -rate * mean + 0.5 * rate * rate * sd * sd,
            closed: Some(DelayFamily::normal(mean - rate * sd * sd, sd)?),
        }),
        DelayFamily::Lognormal { .. } | DelayFamily::Weibull { .. } => {
            let center = tilt_center(dist, rate);
            match integrate_positive_axis(|x| dist.pdf(x) * (-rate * x).exp(), center, REL_TOL) {
                TailIntegral::Converged(z) if z > 0.0 && z.is_finite() => Ok(TiltedDensity {
                    base: *dist,
                    rate,
                    log_normalizer: z.ln(),
                    closed: None,
                }),
                _ => Err(DelayError::DivergentNormalizer {
                    family: dist.kind().name(),
                    rate,
                }),
            }
        }
    }
}

/// Where the tilted integrand has its bulk: the panel expansion starts here.
fn tilt_center(dist: &DelayFamily, rate: f64) -> f64 {
    let natural = dist.mean().abs() + dist.sd();
    if rate > 0.0 {
        natural.min(1.0 / rate).max(1e-3)
    } else {
        natural.max(1e-3)
    }
}

impl TiltedDensity {
    pub fn base(&self) -> &DelayFamily {
        &self.base
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// ln ∫ f(x)·e^{−rate·x} dx over the support of the base family.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// The tilted distribution as a shipped family, when it closes.
    pub fn as_closed_form(&self) -> Option<&DelayFamily> {
        self.closed.as_ref()
    }

    /// Tilted density b(x) = f(x)·e^{−rate·x − log_normalizer}.
    pub fn pdf(&self, x: f64) -> f64 {
        match &self.closed {
            Some(d) => d.pdf(x),
            None => self.base.pdf(x) * (-self.rate * x - self.log_normalizer).exp(),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match &self.closed {
            Some(d) => d.ln_pdf(x),
            None => self.base.ln_pdf(x) - self.rate * x - self.log_normalizer,
        }
    }

    /// CDF of the tilted density (numeric integration when no closed form).
    pub fn cdf(&self, x: f64) -> f64 {
        if let Some(d) = &self.closed {
            return d.cdf(x);
        }
        if x <= 0.0 {
            return 0.0;
        }
        let raw = integrate_positive_prefix(
            |t| self.base.pdf(t) * (-self.rate * t).exp(),
            x,
            REL_TOL,
        );
        (raw * (-self.log_normalizer).exp()).clamp(0.0, 1.0)
    }

    /// Mean of the tilted density.
    pub fn mean(&self) -> f64 {
        if let Some(d) = &self.closed {
            return d.mean();
        }
        self.moment(1)
    }

    /// Standard deviation of the tilted density.
    pub fn sd(&self) -> f64 {
        if let Some(d) = &self.closed {
            return d.sd();
        }
        let m1 = self.moment(1);
        let m2 = self.moment(2);
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    fn moment(&self, order: i32) -> f64 {
        let center = tilt_center(&self.base, self.rate);
        match integrate_positive_axis(
            |x| x.powi(order) * self.base.pdf(x) * (-self.rate * x).exp(),
            center,
            REL_TOL,
        ) {
            TailIntegral::Converged(v) => v * (-self.log_normalizer).exp(),
            TailIntegral::Divergent => f64::NAN,
        }
    }

    /// Quantile of the tilted density.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if let Some(d) = &self.closed {
            return d.quantile(p);
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(DelayError::InvalidParameter {
                name: "p",
                value: p,
                reason: "quantile probability must lie in (0,1)",
            });
        }
        let mut hi = (self.base.mean() + self.base.sd()).max(1.0);
        let mut guard = 0;
        while self.cdf(hi) < p {
            hi *= 2.0;
            guard += 1;
            if guard > 100 {
                return Err(DelayError::RootFind("tilted quantile bracket failed".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..100 {
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
        Ok(0.5 * (lo + hi))
    }

    /// Mean, sd and quantiles of the tilted density in one pass.
    pub fn summary(&self, probs: &[f64]) -> Result<SummaryStats> {
        if let Some(d) = &self.closed {
            return crate::distributions::summary_from_params(d, probs);
        }
        let quantiles = probs
            .iter()
            .map(|&p| self.quantile(p).map(|q| (p, q)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SummaryStats {
            mean: self.mean(),
            sd: self.sd(),
            quantiles,
        })
    }
}
