//! The doubly-interval-censored, optionally truncation- or tilt-adjusted
//! case likelihood.
//!
//! For one case with primary window P and secondary window S,
//!
//! ```text
//! L = (1/|S|) ∫_P π(p) [ Σ_{[sL,sR) ⊂ S} ( F(min(sR,T)−p) − F(sL−p) )₊ / N(p) ] dp
//! ```
//!
//! where π is the within-window prior density of the latent primary time
//! (uniform, or ∝ e^{r·p}), F is the delay CDF (the exponentially tilted CDF
//! when dynamical bias is being corrected) and N(p) = F(T−p) normalizes by
//! the probability of observing any delay before the cutoff when right
//! truncation is adjusted (N ≡ 1 otherwise). Dividing by the window measures
//! makes L a density: as both windows shrink, ln L → ln f(delay).
//!
//! The outer integral uses fixed Gauss-Legendre nodes per window segment.
//! Everything depends only on times relative to the primary window start, so
//! terms are evaluated in translated coordinates; cases that coincide after
//! translation (ubiquitous in daily-censored data) share one evaluation.

use super::{AdjustmentSet, PrimaryPrior};
use crate::distributions::{tilt, DelayFamily, TiltedDensity};
use crate::error::{DelayError, Result};
use crate::linelist::{CaseRecord, Linelist, Segment};
use crate::numeric::quadrature::GaussLegendre;
use std::collections::HashMap;
use std::sync::Arc;

/// One case's log-likelihood contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoglikTerm {
    /// ln L; −∞ when the likelihood underflows to zero.
    pub value: f64,
    /// Set when a truncation normalizer hit zero or the case likelihood
    /// collapsed to zero.
    pub flagged: bool,
}

/// Delay CDF under the active adjustment set.
enum DelayCdf<'a> {
    Plain(&'a DelayFamily),
    Tilted(TiltedDensity),
}

impl DelayCdf<'_> {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            DelayCdf::Plain(d) => d.cdf(x),
            DelayCdf::Tilted(t) => t.cdf(x),
        }
    }
}

fn build_cdf<'a>(dist: &'a DelayFamily, adj: &AdjustmentSet) -> Result<DelayCdf<'a>> {
    match adj.dynamical() {
        Some(r) => Ok(DelayCdf::Tilted(tilt(dist, r)?)),
        None => Ok(DelayCdf::Plain(dist)),
    }
}

/// Log-likelihood of a single case.
///
/// `observation_time` is required (finite) when `adj` applies right
/// truncation. `nodes` is the Gauss-Legendre node count per segment.
pub fn loglik_case(
    dist: &DelayFamily,
    case: &CaseRecord,
    adj: &AdjustmentSet,
    observation_time: Option<f64>,
    nodes: usize,
) -> Result<LoglikTerm> {
    let cdf = build_cdf(dist, adj)?;
    let rule = GaussLegendre::cached(nodes);
    let horizon = truncation_horizon(adj, observation_time)?;
    Ok(case_term(&cdf, case, adj, horizon, &rule))
}

fn truncation_horizon(adj: &AdjustmentSet, observation_time: Option<f64>) -> Result<Option<f64>> {
    if !adj.right_truncation() {
        return Ok(None);
    }
    match observation_time {
        Some(t) if t.is_finite() => Ok(Some(t)),
        _ => Err(DelayError::FitPrecondition(
            "right-truncation adjustment requires a finite observation time".into(),
        )),
    }
}

/// Canonical per-case evaluation in coordinates translated so the primary
/// window starts at zero.
fn case_term(
    cdf: &DelayCdf<'_>,
    case: &CaseRecord,
    adj: &AdjustmentSet,
    horizon: Option<f64>,
    rule: &GaussLegendre,
) -> LoglikTerm {
    let shift = case.primary.lower();
    let primary: Vec<Segment> = case
        .primary
        .segments()
        .iter()
        .map(|s| Segment {
            lo: s.lo - shift,
            hi: s.hi - shift,
        })
        .collect();
    let secondary: Vec<Segment> = case
        .secondary
        .segments()
        .iter()
        .map(|s| Segment {
            lo: s.lo - shift,
            hi: s.hi - shift,
        })
        .collect();
    let horizon = horizon.map(|t| t - shift);
    let secondary_measure: f64 = secondary.iter().map(Segment::measure).sum();

    // prior density over the translated primary window
    let prior_rate = match adj.primary_prior() {
        PrimaryPrior::Uniform => 0.0,
        PrimaryPrior::GrowthTilted(r) => r,
    };
    let prior_norm: f64 = primary
        .iter()
        .map(|s| {
            if prior_rate == 0.0 {
                s.measure()
            } else {
                (prior_rate * s.lo).exp() * (prior_rate * s.measure()).exp_m1() / prior_rate
            }
        })
        .sum();

    let mut flagged = false;
    let mut integral = 0.0;
    for seg in &primary {
        for (p, w) in rule.mapped(seg.lo, seg.hi) {
            let mut inner = 0.0;
            for s in &secondary {
                let hi = match horizon {
                    Some(t) => s.hi.min(t),
                    None => s.hi,
                };
                inner += (cdf.cdf(hi - p) - cdf.cdf(s.lo - p)).max(0.0);
            }
            let term = match horizon {
                Some(t) => {
                    let norm = cdf.cdf(t - p);
                    if norm <= 0.0 {
                        // nothing could have been observed from this latent
                        // time; contributes zero probability
                        flagged = true;
                        0.0
                    } else {
                        inner / norm
                    }
                }
                None => inner,
            };
            let density = if prior_rate == 0.0 {
                1.0 / prior_norm
            } else {
                (prior_rate * p).exp() / prior_norm
            };
            integral += w * density * term;
        }
    }

    let likelihood = integral / secondary_measure;
    if likelihood > 0.0 && likelihood.is_finite() {
        LoglikTerm {
            value: likelihood.ln(),
            flagged,
        }
    } else {
        LoglikTerm {
            value: f64::NEG_INFINITY,
            flagged: true,
        }
    }
}

/// Whole-linelist log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetLoglik {
    /// Sum over cases in case order.
    pub total: f64,
    pub per_case: Vec<f64>,
    pub any_flagged: bool,
}

/// Key identifying cases that are identical up to translation (same window
/// shapes and same effective horizon), which share one likelihood value.
#[derive(PartialEq, Eq, Hash)]
struct CaseKey(Vec<u64>);

fn case_key(case: &CaseRecord, horizon: Option<f64>) -> CaseKey {
    let shift = case.primary.lower();
    let mut bits = Vec::with_capacity(2 * (case.primary.segments().len() + case.secondary.segments().len()) + 1);
    for s in case.primary.segments() {
        bits.push((s.lo - shift).to_bits());
        bits.push((s.hi - shift).to_bits());
    }
    bits.push(u64::MAX); // separator
    for s in case.secondary.segments() {
        bits.push((s.lo - shift).to_bits());
        bits.push((s.hi - shift).to_bits());
    }
    bits.push(match horizon {
        Some(t) => (t - shift).to_bits(),
        None => u64::MAX - 1,
    });
    CaseKey(bits)
}

/// Evaluates the dataset log-likelihood, reusing the term for cases that are
/// identical up to translation. Summation runs in case order.
pub fn loglik_dataset(
    dist: &DelayFamily,
    linelist: &Linelist,
    adj: &AdjustmentSet,
    nodes: usize,
) -> Result<DatasetLoglik> {
    let cdf = build_cdf(dist, adj)?;
    let rule: Arc<GaussLegendre> = GaussLegendre::cached(nodes);
    let horizon = truncation_horizon(adj, linelist.observation_time())?;

    let mut cache: HashMap<CaseKey, LoglikTerm> = HashMap::new();
    let mut per_case = Vec::with_capacity(linelist.len());
    let mut any_flagged = false;
    for case in linelist.cases() {
        let key = case_key(case, horizon);
        let term = *cache
            .entry(key)
            .or_insert_with(|| case_term(&cdf, case, adj, horizon, &rule));
        any_flagged |= term.flagged;
        per_case.push(term.value);
    }
    let total = per_case.iter().sum();
    Ok(DatasetLoglik {
        total,
        per_case,
        any_flagged,
    })
}
