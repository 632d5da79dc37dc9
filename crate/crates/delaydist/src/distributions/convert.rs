//! Conversion between natural parameters and (mean, sd) summaries.
//!
//! Matching moments is the one deterministic, invertible convention for
//! turning a published mean/sd pair into natural parameters, and the reverse
//! direction is closed form for every shipped family. Getting this wrong is
//! a classic reporting error (lognormal meanlog is not the log of the mean),
//! so both directions carry tests against independently computed moments.

use crate::distributions::{weibull_cv2, DelayFamily, FamilyKind};
use crate::error::{DelayError, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Mean, standard deviation and a quantile grid, all in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    /// (probability, value) pairs, strictly increasing in probability.
    pub quantiles: Vec<(f64, f64)>,
}

/// Moment-matched natural parameters for the given family.
pub fn params_from_summary(kind: FamilyKind, mean: f64, sd: f64) -> Result<DelayFamily> {
    let invalid = |reason: &'static str| DelayError::InvalidSummary {
        family: kind.name(),
        mean,
        sd,
        reason,
    };
    if !sd.is_finite() || sd <= 0.0 {
        return Err(invalid("sd must be finite and > 0"));
    }
    if !mean.is_finite() {
        return Err(invalid("mean must be finite"));
    }
    if kind.positive_support() && mean <= 0.0 {
        return Err(invalid("mean must be > 0 for a positive-support family"));
    }

    match kind {
        FamilyKind::Gamma => {
            let shape = (mean / sd).powi(2);
            let rate = mean / (sd * sd);
            DelayFamily::gamma(shape, rate)
        }
        FamilyKind::Lognormal => {
            let cv2 = (sd / mean).powi(2);
            let sdlog2 = cv2.ln_1p();
            let meanlog = mean.ln() - 0.5 * sdlog2;
            DelayFamily::lognormal(meanlog, sdlog2.sqrt())
        }
        FamilyKind::Weibull => {
            let shape = weibull_shape_from_cv2((sd / mean).powi(2))?;
            let scale = mean / gamma(1.0 + 1.0 / shape);
            DelayFamily::weibull(shape, scale)
        }
        FamilyKind::Normal => DelayFamily::normal(mean, sd),
    }
}

/// Closed-form mean/sd plus quantiles at the requested probabilities.
pub fn summary_from_params(dist: &DelayFamily, probs: &[f64]) -> Result<SummaryStats> {
    for pair in probs.windows(2) {
        if pair[1] <= pair[0] {
            return Err(DelayError::InvalidParameter {
                name: "probs",
                value: pair[1],
                reason: "quantile probabilities must be strictly increasing",
            });
        }
    }
    let quantiles = probs
        .iter()
        .map(|&p| dist.quantile(p).map(|q| (p, q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SummaryStats {
        mean: dist.mean(),
        sd: dist.sd(),
        quantiles,
    })
}

/// Solves `cv²(k) = target` for the Weibull shape by bisection.
///
/// cv² is strictly decreasing in k; the bracket [0.05, 500] spans cv from
/// ~3.7e5 down to ~2.6e-3. Bisection runs to floating-point exhaustion.
fn weibull_shape_from_cv2(target: f64) -> Result<f64> {
    const K_LO: f64 = 0.05;
    const K_HI: f64 = 500.0;
    let f = |k: f64| weibull_cv2(k) - target;
    if f(K_LO) < 0.0 || f(K_HI) > 0.0 {
        return Err(DelayError::RootFind(format!(
            "Weibull cv² {target:.6e} outside representable range for shape in [{K_LO}, {K_HI}]"
        )));
    }
    let mut lo = K_LO;
    let mut hi = K_HI;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
