//! Likelihood construction, fitting, model comparison and diagnostics.
//!
//! The likelihood marginalizes the latent event times inside their censoring
//! windows by deterministic Gauss-Legendre quadrature (uniform or
//! growth-tilted within-window priors), normalizes by the probability of
//! observing the delay before the cutoff when correcting right truncation,
//! and swaps in the exponentially tilted CDF when correcting dynamical bias.
//! Maximum-likelihood and adaptive random-walk Metropolis fits share that one
//! likelihood.

mod compare;
mod diagnostics;
mod likelihood;
mod mcmc;
mod mle;
mod posthoc;
mod survival;

pub use compare::{compare_models, waic_from_pointwise, ComparisonRow, ComparisonTable};
pub use diagnostics::{rank_normalized_ess, split_rhat};
pub use likelihood::{loglik_case, loglik_dataset, DatasetLoglik, LoglikTerm};
pub use mcmc::fit_mcmc;
pub use mle::fit_mle;
pub use posthoc::backward_to_forward;
pub use survival::{kaplan_meier, SurvivalCurve, SurvivalStep};

use crate::distributions::{DelayFamily, FamilyKind};
use crate::error::{DelayError, Result};
use crate::linelist::{CohortDirection, Linelist};
use serde::{Deserialize, Serialize};

/// The eight quantile probabilities every report carries.
pub const REPORT_PROBS: [f64; 8] = [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.99];

/// Convergence threshold on split R-hat.
pub const RHAT_THRESHOLD: f64 = 1.05;

/// Prior for the latent primary event time within its window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimaryPrior {
    /// Uniform over the window (the recommended latent-variable model).
    #[default]
    Uniform,
    /// Density ∝ e^{r·p} within the window, for use when incidence grows or
    /// decays fast enough that the uniform approximation slips.
    GrowthTilted(f64),
}

/// Which bias corrections a likelihood applies.
///
/// Double interval censoring is always adjusted; right truncation and
/// dynamical (tilt) correction are mutually exclusive because applying both
/// overcompensates the same missing-data mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "AdjustmentSetRepr")]
pub struct AdjustmentSet {
    right_truncation: bool,
    dynamical: Option<f64>,
    primary_prior: PrimaryPrior,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct AdjustmentSetRepr {
    double_censoring: bool,
    right_truncation: bool,
    dynamical: Option<f64>,
    #[serde(default)]
    primary_prior: PrimaryPrior,
}

impl From<AdjustmentSet> for AdjustmentSetRepr {
    fn from(a: AdjustmentSet) -> Self {
        AdjustmentSetRepr {
            double_censoring: true,
            right_truncation: a.right_truncation,
            dynamical: a.dynamical,
            primary_prior: a.primary_prior,
        }
    }
}

impl<'de> Deserialize<'de> for AdjustmentSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = AdjustmentSetRepr::deserialize(d)?;
        if !repr.double_censoring {
            return Err(D::Error::custom(
                "double censoring is always adjusted for and cannot be disabled",
            ));
        }
        AdjustmentSet::new(repr.right_truncation, repr.dynamical, repr.primary_prior)
            .map_err(D::Error::custom)
    }
}

impl AdjustmentSet {
    pub fn new(
        right_truncation: bool,
        dynamical: Option<f64>,
        primary_prior: PrimaryPrior,
    ) -> Result<Self> {
        if right_truncation && dynamical.is_some() {
            return Err(DelayError::InvalidAdjustments(
                "right truncation and dynamical bias must not be adjusted simultaneously".into(),
            ));
        }
        if let Some(r) = dynamical {
            if !r.is_finite() {
                return Err(DelayError::InvalidAdjustments(format!(
                    "dynamical tilt rate {r} must be finite"
                )));
            }
        }
        Ok(AdjustmentSet {
            right_truncation,
            dynamical,
            primary_prior,
        })
    }

    /// Double interval censoring only.
    pub fn censoring_only() -> Self {
        AdjustmentSet {
            right_truncation: false,
            dynamical: None,
            primary_prior: PrimaryPrior::Uniform,
        }
    }

    /// Censoring plus right-truncation normalization.
    pub fn with_truncation() -> Self {
        AdjustmentSet {
            right_truncation: true,
            dynamical: None,
            primary_prior: PrimaryPrior::Uniform,
        }
    }

    /// Censoring plus dynamical (tilt) correction at growth rate `r`, for
    /// backward-cohorted data.
    pub fn with_dynamical(r: f64) -> Result<Self> {
        AdjustmentSet::new(false, Some(r), PrimaryPrior::Uniform)
    }

    pub fn with_primary_prior(mut self, prior: PrimaryPrior) -> Self {
        self.primary_prior = prior;
        self
    }

    /// Always true; kept as an accessor so call sites read like the model.
    pub fn double_censoring(&self) -> bool {
        true
    }

    pub fn right_truncation(&self) -> bool {
        self.right_truncation
    }

    pub fn dynamical(&self) -> Option<f64> {
        self.dynamical
    }

    pub fn primary_prior(&self) -> PrimaryPrior {
        self.primary_prior
    }

    /// Short machine token, e.g. `censoring+truncation`.
    pub fn label(&self) -> String {
        let mut parts = vec!["censoring".to_string()];
        if self.right_truncation {
            parts.push("truncation".into());
        }
        if let Some(r) = self.dynamical {
            parts.push(format!("dynamical({r})"));
        }
        parts.join("+")
    }
}

/// Analysis context for the bias-adjustment decision tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionContext {
    /// Data are being analyzed while the outbreak is still being observed.
    pub real_time: bool,
    pub modeling_direction: CohortDirection,
    /// Estimated epidemic growth rate, when one is available.
    pub growth_rate: Option<f64>,
    /// Surveillance stopped before every secondary event could occur.
    pub surveillance_ended_early: bool,
}

/// Chooses the adjustment set for a context.
///
/// Censoring is always adjusted. Modeling forward: real-time analysis or
/// prematurely ended surveillance needs the truncation normalization, a
/// complete retrospective dataset does not. Modeling backward: dynamical
/// correction with a known growth rate is required, and truncation is never
/// also applied.
pub fn decide_adjustments(ctx: &DecisionContext) -> Result<AdjustmentSet> {
    match ctx.modeling_direction {
        CohortDirection::Forward => {
            if ctx.real_time || ctx.surveillance_ended_early {
                Ok(AdjustmentSet::with_truncation())
            } else {
                Ok(AdjustmentSet::censoring_only())
            }
        }
        CohortDirection::Backward => match ctx.growth_rate {
            Some(r) => AdjustmentSet::with_dynamical(r),
            None => Err(DelayError::Undecidable(
                "backward modeling requires a growth-rate estimate for dynamical correction"
                    .into(),
            )),
        },
    }
}

/// Fitting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Mle,
    Mcmc,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::Mle => "mle",
            FitMethod::Mcmc => "mcmc",
        })
    }
}

/// Normal prior on one unconstrained coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub location: f64,
    pub scale: f64,
}

/// Sampler options (the seed also drives MLE restart jitter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcOptions {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    pub target_acceptance: f64,
    pub seed: u64,
    /// Disable warmup covariance/scale adaptation (diagnostic testing).
    pub adapt: bool,
    /// Initial proposal step on the unconstrained scale.
    pub initial_step: f64,
    /// Per-chain initial points on the unconstrained scale; default is the
    /// moment-fit location plus chain-specific jitter.
    pub init_overrides: Option<Vec<Vec<f64>>>,
}

impl Default for McmcOptions {
    fn default() -> Self {
        McmcOptions {
            chains: 4,
            warmup: 1000,
            samples: 1000,
            target_acceptance: 0.234,
            seed: crate::DEFAULT_SEED,
            adapt: true,
            initial_step: 0.5,
            init_overrides: None,
        }
    }
}

/// Options shared by both fitting methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub method: FitMethod,
    /// Gauss-Legendre nodes per window segment.
    pub quadrature_nodes: usize,
    pub mcmc: McmcOptions,
    /// Priors on the unconstrained parameters; None centers weakly
    /// informative normals on a moment fit to the naive delays.
    pub priors: Option<Vec<PriorSpec>>,
    pub ci_level: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            method: FitMethod::Mle,
            quadrature_nodes: 21,
            mcmc: McmcOptions::default(),
            priors: None,
            ci_level: 0.95,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| DelayError::FitPrecondition(msg);
        if self.quadrature_nodes < 5 {
            return Err(bad(format!(
                "quadrature_nodes {} < 5",
                self.quadrature_nodes
            )));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(bad(format!("ci_level {} outside (0,1)", self.ci_level)));
        }
        if self.method == FitMethod::Mcmc {
            if self.mcmc.chains < 2 {
                return Err(bad("MCMC needs at least 2 chains for diagnostics".into()));
            }
            if self.mcmc.samples == 0 {
                return Err(bad("MCMC needs at least 1 retained sample".into()));
            }
            if !(self.mcmc.target_acceptance > 0.0 && self.mcmc.target_acceptance < 1.0) {
                return Err(bad("target acceptance outside (0,1)".into()));
            }
        }
        if let Some(priors) = &self.priors {
            if priors.len() != 2 {
                return Err(bad(format!(
                    "expected 2 prior specs (one per parameter), got {}",
                    priors.len()
                )));
            }
            if priors
                .iter()
                .any(|p| p.scale <= 0.0 || p.scale.is_nan() || !p.location.is_finite())
            {
                return Err(bad(
                    "prior scales must be positive and locations finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A point value with an optional uncertainty interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Estimate {
    pub fn point(value: f64) -> Self {
        Estimate {
            value,
            lower: None,
            upper: None,
        }
    }

    pub fn with_interval(value: f64, lower: f64, upper: f64) -> Self {
        Estimate {
            value,
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    pub fn has_interval(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    /// True when the interval, if present, contains the point.
    pub fn consistent(&self) -> bool {
        match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => lo <= self.value && self.value <= hi,
            _ => true,
        }
    }
}

/// One natural parameter with its interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub estimate: Estimate,
}

/// Summary-scale estimates with intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryWithIntervals {
    pub mean: Estimate,
    pub sd: Estimate,
    pub median: Estimate,
    /// The eight report probabilities, ascending.
    pub quantiles: Vec<(f64, Estimate)>,
}

/// Sampler/optimizer health, reported rather than hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Split R-hat per unconstrained parameter (MCMC only).
    pub rhat: Vec<f64>,
    /// Rank-normalized bulk effective sample size per parameter (MCMC only).
    pub ess: Vec<f64>,
    /// Post-warmup acceptance rate per chain (MCMC only).
    pub acceptance: Vec<f64>,
    pub converged: bool,
    pub messages: Vec<String>,
}

/// Where a fit came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n: usize,
    pub observation_time: Option<f64>,
    pub seed: u64,
    pub runtime_seconds: f64,
    pub version: String,
    pub data_hash: String,
}

/// Retained posterior draws (MCMC).
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    /// Row per draw, column per parameter, unconstrained scale.
    pub unconstrained: Vec<Vec<f64>>,
    /// Same rows on the natural-parameter scale.
    pub natural: Vec<Vec<f64>>,
    pub chain_ids: Vec<usize>,
}

/// Per-case log-likelihood storage.
#[derive(Debug, Clone, PartialEq)]
pub enum PointwiseLoglik {
    /// At the point estimate (MLE).
    PerCase(Vec<f64>),
    /// `[draw][case]` across retained draws (MCMC).
    PerCasePerDraw(Vec<Vec<f64>>),
}

/// A fitted delay distribution with uncertainty, fit criteria, diagnostics
/// and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: FamilyKind,
    pub adjustments: AdjustmentSet,
    pub method: FitMethod,
    pub ci_level: f64,
    /// Point estimate as a distribution.
    pub dist: DelayFamily,
    pub params: Vec<ParamEstimate>,
    pub summary: SummaryWithIntervals,
    /// Covariance of the unconstrained parameters (MLE with usable Hessian).
    pub covariance: Option<Vec<Vec<f64>>>,
    pub draws: Option<Draws>,
    pub pointwise_loglik: PointwiseLoglik,
    pub loglik: f64,
    pub aic: f64,
    pub waic: Option<f64>,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

impl FitResult {
    /// Serializable document (draws and pointwise matrices stay in memory;
    /// draws export is a separate CSV).
    pub fn document(&self) -> FitDocument {
        FitDocument {
            schema_version: FIT_SCHEMA_VERSION.to_string(),
            family: self.family,
            method: self.method,
            adjustments: self.adjustments,
            ci_level: self.ci_level,
            point: self.dist,
            params: self.params.clone(),
            summary: self.summary.clone(),
            loglik: self.loglik,
            aic: self.aic,
            waic: self.waic,
            diagnostics: self.diagnostics.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Draws CSV: one column per natural parameter, one row per retained draw.
    pub fn write_draws_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let draws = self
            .draws
            .as_ref()
            .ok_or_else(|| DelayError::FitPrecondition("no draws to export (MLE fit)".into()))?;
        let mut out = csv::Writer::from_writer(writer);
        let (n1, n2) = crate::distributions::param_names(self.family);
        out.write_record([n1, n2])?;
        for row in &draws.natural {
            out.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub const FIT_SCHEMA_VERSION: &str = "1";

/// The serializable fit document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDocument {
    pub schema_version: String,
    pub family: FamilyKind,
    pub method: FitMethod,
    pub adjustments: AdjustmentSet,
    pub ci_level: f64,
    pub point: DelayFamily,
    pub params: Vec<ParamEstimate>,
    pub summary: SummaryWithIntervals,
    pub loglik: f64,
    pub aic: f64,
    pub waic: Option<f64>,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

// --- unconstrained transform ------------------------------------------------

/// Natural → unconstrained (log-transform of positive parameters).
pub(crate) fn to_unconstrained(kind: FamilyKind, params: [f64; 2]) -> [f64; 2] {
    match kind {
        FamilyKind::Gamma | FamilyKind::Weibull => [params[0].ln(), params[1].ln()],
        FamilyKind::Lognormal | FamilyKind::Normal => [params[0], params[1].ln()],
    }
}

/// Unconstrained → distribution; errors when exp overflows.
pub(crate) fn from_unconstrained(kind: FamilyKind, theta: &[f64]) -> Result<DelayFamily> {
    match kind {
        FamilyKind::Gamma => DelayFamily::gamma(theta[0].exp(), theta[1].exp()),
        FamilyKind::Weibull => DelayFamily::weibull(theta[0].exp(), theta[1].exp()),
        FamilyKind::Lognormal => DelayFamily::lognormal(theta[0], theta[1].exp()),
        FamilyKind::Normal => DelayFamily::normal(theta[0], theta[1].exp()),
    }
}

/// True when the i-th unconstrained coordinate is a log-parameter.
pub(crate) fn is_log_coordinate(kind: FamilyKind, index: usize) -> bool {
    match kind {
        FamilyKind::Gamma | FamilyKind::Weibull => true,
        FamilyKind::Lognormal | FamilyKind::Normal => index == 1,
    }
}

/// Shared fit preconditions.
pub(crate) fn validate_fit_inputs(
    linelist: &Linelist,
    family: FamilyKind,
    adj: &AdjustmentSet,
    options: &FitOptions,
) -> Result<()> {
    options.validate()?;
    let dim = family.dim();
    if linelist.len() < dim + 1 {
        return Err(DelayError::FitPrecondition(format!(
            "{} cases < {} (parameter count + 1)",
            linelist.len(),
            dim + 1
        )));
    }
    if adj.right_truncation() && linelist.observation_time().is_none() {
        return Err(DelayError::FitPrecondition(
            "right-truncation adjustment requires a finite observation time".into(),
        ));
    }
    if family.positive_support() {
        // Windows that straddle zero are fine (the CDF difference clamps at
        // zero), but a case whose largest possible delay is still negative
        // has zero likelihood under any positive-support member.
        for case in linelist.cases() {
            if case.max_possible_delay() <= 0.0 {
                return Err(DelayError::FitPrecondition(format!(
                    "case '{}' admits only negative delays; fit a family that allows negatives \
                     or apply a negative-interval policy",
                    case.id
                )));
            }
        }
    }
    Ok(())
}

/// Moment-fit starting point on the unconstrained scale; never fails.
pub(crate) fn initial_guess(kind: FamilyKind, delays: &[f64]) -> [f64; 2] {
    let n = delays.len().max(1) as f64;
    let mean = delays.iter().sum::<f64>() / n;
    let var = delays.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();

    let (mean, sd) = if kind.positive_support() {
        let m = mean.max(1e-3);
        // clamp the cv into the band every family can represent
        let s = sd.clamp(0.02 * m, 50.0 * m).max(1e-6);
        (m, s)
    } else {
        (mean, sd.max(1e-6))
    };

    match crate::distributions::params_from_summary(kind, mean, sd) {
        Ok(d) => to_unconstrained(kind, d.params()),
        Err(_) => {
            let fallback = match kind {
                FamilyKind::Gamma => DelayFamily::gamma(1.0, 1.0 / mean).unwrap(),
                FamilyKind::Lognormal => DelayFamily::lognormal(mean.ln() - 0.125, 0.5).unwrap(),
                FamilyKind::Weibull => DelayFamily::weibull(1.0, mean).unwrap(),
                FamilyKind::Normal => DelayFamily::normal(mean, sd).unwrap(),
            };
            to_unconstrained(kind, fallback.params())
        }
    }
}

#[cfg(test)]
mod tests;
