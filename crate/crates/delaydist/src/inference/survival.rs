//! Kaplan-Meier product-limit estimator for right-censored forward cohorts.

use crate::error::{DelayError, Result};
use serde::{Deserialize, Serialize};

/// One product-limit step (an observed event time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalStep {
    pub time: f64,
    /// S(t) just after this event time.
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
}

/// Nonincreasing survival curve starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub steps: Vec<SurvivalStep>,
}

impl SurvivalCurve {
    /// S(t): probability the delay exceeds t.
    pub fn survival_at(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .rev()
            .find(|s| s.time <= t)
            .map_or(1.0, |s| s.survival)
    }
}

/// Product-limit estimator over distinct event times.
///
/// `event_observed[i]` is false for right-censored delays (the secondary
/// event had not occurred when follow-up ended at `delays[i]`). Ties between
/// events and censorings at the same time count the events first.
pub fn kaplan_meier(delays: &[f64], event_observed: &[bool]) -> Result<SurvivalCurve> {
    if delays.is_empty() {
        return Err(DelayError::EmptyLinelist);
    }
    if delays.len() != event_observed.len() {
        return Err(DelayError::FitPrecondition(format!(
            "{} delays vs {} event flags",
            delays.len(),
            event_observed.len()
        )));
    }
    if delays.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(DelayError::FitPrecondition(
            "Kaplan-Meier needs finite nonnegative delays".into(),
        ));
    }

    let mut order: Vec<usize> = (0..delays.len()).collect();
    order.sort_by(|&a, &b| delays[a].total_cmp(&delays[b]));

    let mut steps = Vec::new();
    let mut survival = 1.0;
    let mut at_risk = delays.len();
    let mut i = 0;
    while i < order.len() {
        let t = delays[order[i]];
        let mut events = 0usize;
        let mut removed = 0usize;
        while i < order.len() && delays[order[i]] == t {
            if event_observed[order[i]] {
                events += 1;
            }
            removed += 1;
            i += 1;
        }
        if events > 0 {
            survival *= 1.0 - events as f64 / at_risk as f64;
            steps.push(SurvivalStep {
                time: t,
                survival,
                at_risk,
                events,
            });
        }
        at_risk -= removed;
    }
    Ok(SurvivalCurve { steps })
}
