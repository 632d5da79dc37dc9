//! The reporting checklist materialized as a structured document.
//!
//! A delay estimate is only as useful as its report: the checklist items
//! cover estimation practice (bias adjustment, multi-family comparison,
//! parameter conversion, stratification, other transmission intervals,
//! diagnostics) and reporting practice (central tendency and variability,
//! quantiles, parameters with the density formula, uncertainty, sample
//! characteristics, the epidemic curve, data availability), plus
//! delay-specific items for incubation periods and serial intervals. Items
//! the inputs cannot support stay in the document with explicit missing
//! markers and lower the completeness score.

mod ppc;
mod render;

pub use ppc::{ppc_data, PpcData};
pub use render::{render, render_json, render_markdown, RenderFormat};

use crate::distributions::FamilyKind;
use crate::error::{DelayError, Result};
use crate::inference::{
    AdjustmentSet, ComparisonTable, Diagnostics, Estimate, FitDocument, FitMethod, ParamEstimate,
    SummaryWithIntervals, REPORT_PROBS,
};
use crate::linelist::{EpidemicCurve, GrowthEstimate, Linelist};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const REPORT_SCHEMA_VERSION: &str = "1";

/// Which delay the report describes; controls checklist applicability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayType {
    Incubation,
    SerialInterval,
    Other,
}

impl DelayType {
    /// Best-effort classification from a free-text delay name.
    pub fn infer(delay_name: &str) -> DelayType {
        let lower = delay_name.to_ascii_lowercase();
        if lower.contains("incubation") {
            DelayType::Incubation
        } else if lower.contains("serial") {
            DelayType::SerialInterval
        } else {
            DelayType::Other
        }
    }
}

/// Checklist item identifiers (fixed enumeration).
pub mod checklist_items {
    pub const ADJUST_FOR_BIASES: &str = "adjust_for_biases";
    pub const COMPARE_DISTRIBUTIONS: &str = "compare_distributions";
    pub const CONVERT_PARAMETERS: &str = "convert_parameters";
    pub const STRATIFY_OR_SUBGROUP: &str = "stratify_or_subgroup";
    pub const OTHER_TRANSMISSION_INTERVALS: &str = "other_transmission_intervals";
    pub const MODEL_DIAGNOSTICS: &str = "model_diagnostics";
    pub const CENTRAL_AND_VARIABILITY: &str = "central_tendency_and_variability";
    pub const QUANTILES: &str = "quantiles";
    pub const DISTRIBUTION_PARAMETERS: &str = "distribution_parameters";
    pub const UNCERTAINTY: &str = "uncertainty";
    pub const SAMPLE_CHARACTERISTICS: &str = "sample_characteristics";
    pub const EPIDEMIC_CURVE: &str = "epidemic_curve";
    pub const DATA_AND_CODE: &str = "data_and_code";
    pub const INCUBATION_MULTIPLE_EXPOSURES: &str = "incubation_multiple_exposures";
    pub const SERIAL_NEGATIVE_INTERVALS: &str = "serial_negative_intervals";
    pub const SERIAL_MULTIPLE_INFECTORS: &str = "serial_multiple_infectors";

    /// Items applicable to every delay type, in report order.
    pub const COMMON: [&str; 13] = [
        ADJUST_FOR_BIASES,
        COMPARE_DISTRIBUTIONS,
        CONVERT_PARAMETERS,
        STRATIFY_OR_SUBGROUP,
        OTHER_TRANSMISSION_INTERVALS,
        MODEL_DIAGNOSTICS,
        CENTRAL_AND_VARIABILITY,
        QUANTILES,
        DISTRIBUTION_PARAMETERS,
        UNCERTAINTY,
        SAMPLE_CHARACTERISTICS,
        EPIDEMIC_CURVE,
        DATA_AND_CODE,
    ];
}

/// Reference to the exported (anonymized) dataset backing the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataExportRef {
    pub path: String,
    pub data_hash: String,
}

/// Optional report inputs beyond the fit itself.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    /// Overrides the delay type inferred from the linelist's delay name.
    pub delay_type: Option<DelayType>,
    /// Truncation-unadjusted companion summary, reported side by side with
    /// the adjusted estimate when the main fit corrects right truncation.
    pub unadjusted_summary: Option<SummaryWithIntervals>,
    /// Multi-family comparison over the same data and adjustments.
    pub comparison: Option<ComparisonTable>,
    /// Statement on other transmission intervals considered (or why not).
    pub other_intervals_note: Option<String>,
    /// Control measures in place during the study period.
    pub control_measures: Option<String>,
    /// Negative-serial-interval policy applied upstream (serial interval).
    pub negative_interval_policy: Option<String>,
    /// How multiple possible infectors were handled (serial interval).
    pub multiple_infectors_note: Option<String>,
    /// Where the anonymized linelist was written.
    pub data_export: Option<DataExportRef>,
}

/// One quantile row; probabilities are the eight report probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub probability: f64,
    pub estimate: Estimate,
}

/// Natural parameters plus the density formula; gamma carries both the rate
/// and the scale parameterization to forestall conversion mistakes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsBlock {
    pub family: FamilyKind,
    pub params: Vec<ParamEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_scale: Option<Estimate>,
    pub pdf_formula: String,
}

/// Report provenance (runtime is deliberately absent so identical inputs
/// render byte-identical documents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub seed: u64,
    pub version: String,
    pub data_hash: String,
}

/// The reporting checklist materialized for one fitted delay distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayReport {
    pub schema_version: String,
    pub delay_name: String,
    pub delay_type: DelayType,
    pub sample_size: usize,
    pub method: FitMethod,
    /// e.g. 0.95.
    pub interval_level: f64,
    /// "credible" (MCMC) or "confidence" (MLE).
    pub interval_kind: String,
    pub mean: Estimate,
    pub median: Estimate,
    pub sd: Estimate,
    pub quantile_table: Vec<QuantileRow>,
    pub params_table: ParamsBlock,
    pub adjustments_applied: AdjustmentSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unadjusted_summary: Option<SummaryWithIntervals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epidemic_curve: Option<EpidemicCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthEstimate>,
    /// strata key → value → case count.
    pub strata_summary: BTreeMap<String, BTreeMap<String, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_measures: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_intervals_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonTable>,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_interval_policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiple_exposure_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiple_infectors_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_export: Option<DataExportRef>,
    pub provenance: ReportProvenance,
    /// item id → present flag, applicable items only.
    pub checklist: BTreeMap<String, bool>,
}

/// Completeness of a report against its applicable checklist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecklistScore {
    /// present / applicable, in [0, 1].
    pub fraction: f64,
    /// Item ids marked missing, sorted.
    pub missing: Vec<String>,
}

/// Builds the report for a fit document and the linelist it came from.
///
/// The fit's data hash must match the linelist. Unavailable inputs leave
/// their checklist items marked missing rather than failing the build.
pub fn build_report(
    fit: &FitDocument,
    linelist: &Linelist,
    curve: Option<&EpidemicCurve>,
    growth: Option<GrowthEstimate>,
    config: &ReportConfig,
) -> Result<DelayReport> {
    let data_hash = linelist.data_hash();
    if fit.provenance.data_hash != data_hash {
        return Err(DelayError::HashMismatch {
            fit_hash: fit.provenance.data_hash.clone(),
            data_hash,
        });
    }

    let delay_type = config
        .delay_type
        .unwrap_or_else(|| DelayType::infer(linelist.delay_name()));

    let mut strata_summary: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for case in linelist.cases() {
        for (key, value) in &case.strata {
            *strata_summary
                .entry(key.clone())
                .or_default()
                .entry(value.clone())
                .or_default() += 1;
        }
    }

    let multiple_exposure_note = if delay_type == DelayType::Incubation {
        let multi = linelist
            .cases()
            .iter()
            .filter(|c| c.primary.segments().len() > 1 || c.primary.measure() > 1.0)
            .count();
        Some(format!(
            "{multi} of {} cases report multi-day or disjoint exposure windows; \
             every window spans all reported exposure dates",
            linelist.len()
        ))
    } else {
        None
    };

    let quantile_table: Vec<QuantileRow> = fit
        .summary
        .quantiles
        .iter()
        .map(|(p, est)| QuantileRow {
            probability: *p,
            estimate: *est,
        })
        .collect();

    let gamma_scale = if fit.family == FamilyKind::Gamma {
        fit.params
            .iter()
            .find(|p| p.name == "rate")
            .map(|rate| Estimate {
                value: 1.0 / rate.estimate.value,
                // reciprocal flips the interval
                lower: rate.estimate.upper.map(|hi| 1.0 / hi),
                upper: rate.estimate.lower.map(|lo| 1.0 / lo),
            })
    } else {
        None
    };

    let params_table = ParamsBlock {
        family: fit.family,
        params: fit.params.clone(),
        gamma_scale,
        pdf_formula: pdf_formula(fit.family).to_string(),
    };

    let mut report = DelayReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        delay_name: linelist.delay_name().to_string(),
        delay_type,
        sample_size: linelist.len(),
        method: fit.method,
        interval_level: fit.ci_level,
        interval_kind: match fit.method {
            FitMethod::Mcmc => "credible".to_string(),
            FitMethod::Mle => "confidence".to_string(),
        },
        mean: fit.summary.mean,
        median: fit.summary.median,
        sd: fit.summary.sd,
        quantile_table,
        params_table,
        adjustments_applied: fit.adjustments,
        unadjusted_summary: config.unadjusted_summary.clone(),
        epidemic_curve: curve.cloned(),
        growth,
        strata_summary,
        control_measures: config.control_measures.clone(),
        other_intervals_note: config.other_intervals_note.clone(),
        comparison: config.comparison.clone(),
        diagnostics: fit.diagnostics.clone(),
        negative_interval_policy: config.negative_interval_policy.clone(),
        multiple_exposure_note,
        multiple_infectors_note: config.multiple_infectors_note.clone(),
        data_export: config.data_export.clone(),
        provenance: ReportProvenance {
            seed: fit.provenance.seed,
            version: fit.provenance.version.clone(),
            data_hash,
        },
        checklist: BTreeMap::new(),
    };
    report.checklist = evaluate_checklist(&report, linelist);
    Ok(report)
}

/// Presence rules for every applicable checklist item.
fn evaluate_checklist(report: &DelayReport, linelist: &Linelist) -> BTreeMap<String, bool> {
    use checklist_items::*;
    let mut items = BTreeMap::new();

    let adjusted = !report.adjustments_applied.right_truncation()
        || report.unadjusted_summary.is_some();
    items.insert(ADJUST_FOR_BIASES.to_string(), adjusted);

    items.insert(
        COMPARE_DISTRIBUTIONS.to_string(),
        report
            .comparison
            .as_ref()
            .is_some_and(|c| c.rows.len() >= 2),
    );

    items.insert(
        CONVERT_PARAMETERS.to_string(),
        !report.params_table.params.is_empty()
            && !report.params_table.pdf_formula.is_empty()
            && report.mean.value.is_finite()
            && report.sd.value.is_finite(),
    );

    // vacuously satisfied when the data carry no strata; otherwise the
    // report must summarize them
    let has_strata_columns = !linelist.strata_keys().is_empty();
    items.insert(
        STRATIFY_OR_SUBGROUP.to_string(),
        !has_strata_columns || !report.strata_summary.is_empty(),
    );

    items.insert(
        OTHER_TRANSMISSION_INTERVALS.to_string(),
        report
            .other_intervals_note
            .as_ref()
            .is_some_and(|s| !s.is_empty()),
    );

    items.insert(
        MODEL_DIAGNOSTICS.to_string(),
        report.method == FitMethod::Mle || !report.diagnostics.rhat.is_empty(),
    );

    items.insert(
        CENTRAL_AND_VARIABILITY.to_string(),
        report.mean.value.is_finite()
            && report.median.value.is_finite()
            && report.sd.value.is_finite(),
    );

    let canonical: Vec<f64> = REPORT_PROBS.to_vec();
    let actual: Vec<f64> = report
        .quantile_table
        .iter()
        .map(|r| r.probability)
        .collect();
    items.insert(QUANTILES.to_string(), actual == canonical);

    items.insert(
        DISTRIBUTION_PARAMETERS.to_string(),
        !report.params_table.params.is_empty() && !report.params_table.pdf_formula.is_empty(),
    );

    let all_intervals = report.mean.has_interval()
        && report.median.has_interval()
        && report.sd.has_interval()
        && report.quantile_table.iter().all(|r| r.estimate.has_interval())
        && report
            .params_table
            .params
            .iter()
            .all(|p| p.estimate.has_interval());
    items.insert(UNCERTAINTY.to_string(), all_intervals);

    items.insert(
        SAMPLE_CHARACTERISTICS.to_string(),
        report.sample_size > 0,
    );

    items.insert(EPIDEMIC_CURVE.to_string(), report.epidemic_curve.is_some());

    items.insert(DATA_AND_CODE.to_string(), report.data_export.is_some());

    match report.delay_type {
        DelayType::Incubation => {
            items.insert(
                INCUBATION_MULTIPLE_EXPOSURES.to_string(),
                report
                    .multiple_exposure_note
                    .as_ref()
                    .is_some_and(|s| !s.is_empty()),
            );
        }
        DelayType::SerialInterval => {
            items.insert(
                SERIAL_NEGATIVE_INTERVALS.to_string(),
                report
                    .negative_interval_policy
                    .as_ref()
                    .is_some_and(|s| !s.is_empty()),
            );
            items.insert(
                SERIAL_MULTIPLE_INFECTORS.to_string(),
                report
                    .multiple_infectors_note
                    .as_ref()
                    .is_some_and(|s| !s.is_empty()),
            );
        }
        DelayType::Other => {}
    }
    items
}

/// Completeness score: present / applicable, with the missing item ids.
pub fn checklist_score(report: &DelayReport) -> ChecklistScore {
    let applicable = report.checklist.len();
    let present = report.checklist.values().filter(|&&v| v).count();
    let missing: Vec<String> = report
        .checklist
        .iter()
        .filter(|(_, &present)| !present)
        .map(|(k, _)| k.clone())
        .collect();
    ChecklistScore {
        fraction: if applicable == 0 {
            1.0
        } else {
            present as f64 / applicable as f64
        },
        missing,
    }
}

/// Density formula with parameter names matching the parameter table.
pub fn pdf_formula(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::Gamma => {
            "f(x) = rate^shape / Gamma(shape) * x^(shape-1) * exp(-rate*x), x >= 0"
        }
        FamilyKind::Lognormal => {
            "f(x) = 1 / (x * sdlog * sqrt(2*pi)) * exp(-(ln(x) - meanlog)^2 / (2*sdlog^2)), x > 0"
        }
        FamilyKind::Weibull => {
            "f(x) = (shape/scale) * (x/scale)^(shape-1) * exp(-(x/scale)^shape), x >= 0"
        }
        FamilyKind::Normal => {
            "f(x) = 1 / (sd * sqrt(2*pi)) * exp(-(x - mean)^2 / (2*sd^2))"
        }
    }
}

/// Sanity used by render and tests: quantiles nondecreasing, points inside
/// intervals.
pub fn validate_tables(report: &DelayReport) -> Result<()> {
    for pair in report.quantile_table.windows(2) {
        if pair[1].estimate.value < pair[0].estimate.value {
            return Err(DelayError::InvalidLinelist(format!(
                "quantile table not monotone at p={}",
                pair[1].probability
            )));
        }
    }
    let mut estimates: Vec<(&str, &Estimate)> = vec![
        ("mean", &report.mean),
        ("median", &report.median),
        ("sd", &report.sd),
    ];
    for row in &report.quantile_table {
        estimates.push(("quantile", &row.estimate));
    }
    for p in &report.params_table.params {
        estimates.push((&p.name, &p.estimate));
    }
    for (name, est) in estimates {
        if !est.consistent() {
            return Err(DelayError::InvalidLinelist(format!(
                "estimate '{name}' lies outside its interval"
            )));
        }
    }
    Ok(())
}
