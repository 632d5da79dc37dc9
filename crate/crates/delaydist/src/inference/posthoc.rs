//! Post-hoc correction of published backward estimates.

use super::REPORT_PROBS;
use crate::distributions::{tilt, DelayFamily, SummaryStats};
use crate::error::Result;

/// Recovers the forward distribution's summary from a backward fit.
///
/// Under constant growth r the backward density is the forward density
/// tilted by e^{−r·x}, so the forward density is proportional to
/// b(x)·e^{+r·x}, an inverse tilt. Closed form for gamma (rate β → β − r,
/// requiring β > r) and normal (mean m → m + r·s²); quadrature otherwise.
/// A lognormal backward fit with r > 0 has no finite forward normalizer and
/// is rejected.
pub fn backward_to_forward(backward_fit: &DelayFamily, r: f64) -> Result<SummaryStats> {
    let forward = tilt(backward_fit, -r)?;
    forward.summary(&REPORT_PROBS)
}
