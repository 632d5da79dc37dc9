//! Markdown and JSON rendering of delay reports.
//!
//! Both formats are deterministic functions of the report: field order is
//! fixed, maps are sorted, and numbers carry nine significant digits in
//! markdown (JSON uses shortest-round-trip formatting).

use super::{checklist_score, DelayReport, DelayType};
use crate::error::Result;
use crate::inference::Estimate;
use crate::linelist::format_days;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Markdown,
    Json,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(RenderFormat::Markdown),
            "json" => Ok(RenderFormat::Json),
            other => Err(format!("unknown render format '{other}'")),
        }
    }
}

/// JSON document (schema-versioned; strict round trip).
pub fn render_json(report: &DelayReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

fn fmt_estimate(e: &Estimate) -> String {
    match (e.lower, e.upper) {
        (Some(lo), Some(hi)) => format!(
            "{} [{}, {}]",
            format_days(e.value),
            format_days(lo),
            format_days(hi)
        ),
        _ => format!("{} [interval unavailable]", format_days(e.value)),
    }
}

/// Markdown document.
pub fn render_markdown(report: &DelayReport) -> String {
    let mut md = String::new();
    let pct = format_days(report.interval_level * 100.0);

    let _ = writeln!(md, "# Delay report: {}", report.delay_name);
    let _ = writeln!(md);
    let _ = writeln!(
        md,
        "Estimated from {} cases by {}. All intervals are {pct}% {} intervals.",
        report.sample_size,
        match report.method {
            crate::inference::FitMethod::Mle => "maximum likelihood",
            crate::inference::FitMethod::Mcmc => "Markov chain Monte Carlo",
        },
        report.interval_kind
    );
    let _ = writeln!(md);

    let _ = writeln!(md, "## Central tendency and variability");
    let _ = writeln!(md);
    let _ = writeln!(md, "| statistic | days |");
    let _ = writeln!(md, "|---|---|");
    let _ = writeln!(md, "| mean | {} |", fmt_estimate(&report.mean));
    let _ = writeln!(md, "| median | {} |", fmt_estimate(&report.median));
    let _ = writeln!(md, "| sd | {} |", fmt_estimate(&report.sd));
    let _ = writeln!(md);

    let _ = writeln!(md, "## Quantiles");
    let _ = writeln!(md);
    let _ = writeln!(md, "| quantile (%) | days |");
    let _ = writeln!(md, "|---|---|");
    for row in &report.quantile_table {
        let _ = writeln!(
            md,
            "| {} | {} |",
            format_days(row.probability * 100.0),
            fmt_estimate(&row.estimate)
        );
    }
    let _ = writeln!(md);

    let _ = writeln!(md, "## Fitted distribution");
    let _ = writeln!(md);
    let _ = writeln!(md, "Family: {}", report.params_table.family);
    let _ = writeln!(md);
    let _ = writeln!(md, "| parameter | estimate |");
    let _ = writeln!(md, "|---|---|");
    for p in &report.params_table.params {
        let _ = writeln!(md, "| {} | {} |", p.name, fmt_estimate(&p.estimate));
    }
    if let Some(scale) = &report.params_table.gamma_scale {
        let _ = writeln!(md, "| scale (= 1/rate) | {} |", fmt_estimate(scale));
    }
    let _ = writeln!(md);
    let _ = writeln!(md, "Density: `{}`", report.params_table.pdf_formula);
    let _ = writeln!(md);

    let _ = writeln!(md, "## Bias adjustments");
    let _ = writeln!(md);
    let _ = writeln!(md, "Applied: {}", report.adjustments_applied.label());
    if let Some(unadj) = &report.unadjusted_summary {
        let _ = writeln!(md);
        let _ = writeln!(
            md,
            "Right-truncation-unadjusted companion estimates (for comparison):"
        );
        let _ = writeln!(md);
        let _ = writeln!(md, "| statistic | days |");
        let _ = writeln!(md, "|---|---|");
        let _ = writeln!(md, "| mean | {} |", fmt_estimate(&unadj.mean));
        let _ = writeln!(md, "| median | {} |", fmt_estimate(&unadj.median));
        let _ = writeln!(md, "| sd | {} |", fmt_estimate(&unadj.sd));
    }
    let _ = writeln!(md);

    if let Some(comparison) = &report.comparison {
        let _ = writeln!(md, "## Model comparison ({})", comparison.criterion);
        let _ = writeln!(md);
        let _ = writeln!(md, "| family | {} | delta | log-likelihood |", comparison.criterion);
        let _ = writeln!(md, "|---|---|---|---|");
        for row in &comparison.rows {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} |",
                row.family,
                format_days(row.criterion_value),
                format_days(row.delta),
                format_days(row.loglik)
            );
        }
        let _ = writeln!(md);
    }

    let _ = writeln!(md, "## Epidemic context");
    let _ = writeln!(md);
    match &report.epidemic_curve {
        Some(curve) => {
            let _ = writeln!(
                md,
                "Epidemic curve (primary events/day), days {}..{}: total {} cases.",
                curve.start_day,
                curve.end_day(),
                curve.total()
            );
            let series: Vec<String> = curve
                .iter()
                .map(|(d, c)| format!("{d}:{c}"))
                .collect();
            let _ = writeln!(md);
            let _ = writeln!(md, "```\n{}\n```", series.join(" "));
        }
        None => {
            let _ = writeln!(md, "Epidemic curve: not supplied.");
        }
    }
    if let Some(g) = &report.growth {
        let _ = writeln!(
            md,
            "Growth rate over days {}..{}: {} per day (se {}).",
            g.fit_window.0,
            g.fit_window.1,
            format_days(g.rate),
            format_days(g.stderr)
        );
    }
    if let Some(cm) = &report.control_measures {
        let _ = writeln!(md, "Control measures: {cm}");
    }
    let _ = writeln!(md);

    if !report.strata_summary.is_empty() {
        let _ = writeln!(md, "## Sample characteristics");
        let _ = writeln!(md);
        let _ = writeln!(md, "| stratum | value | cases |");
        let _ = writeln!(md, "|---|---|---|");
        for (key, values) in &report.strata_summary {
            for (value, count) in values {
                let _ = writeln!(md, "| {key} | {value} | {count} |");
            }
        }
        let _ = writeln!(md);
    }

    let _ = writeln!(md, "## Diagnostics");
    let _ = writeln!(md);
    if report.diagnostics.rhat.is_empty() {
        let _ = writeln!(
            md,
            "Optimizer converged: {}.",
            report.diagnostics.converged
        );
    } else {
        let _ = writeln!(
            md,
            "| split R-hat | bulk ESS | acceptance per chain | converged |"
        );
        let _ = writeln!(md, "|---|---|---|---|");
        let fmt_vec = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} |",
            fmt_vec(&report.diagnostics.rhat),
            report
                .diagnostics
                .ess
                .iter()
                .map(|x| format!("{x:.0}"))
                .collect::<Vec<_>>()
                .join(", "),
            fmt_vec(&report.diagnostics.acceptance),
            report.diagnostics.converged
        );
        let _ = writeln!(
            md,
            "\nRandom-walk Metropolis reports acceptance in place of divergent transitions \
             (no gradient-based transitions exist)."
        );
    }
    for msg in &report.diagnostics.messages {
        let _ = writeln!(md, "- {msg}");
    }
    let _ = writeln!(md);

    match report.delay_type {
        DelayType::Incubation => {
            let _ = writeln!(md, "## Incubation-period notes");
            let _ = writeln!(md);
            if let Some(note) = &report.multiple_exposure_note {
                let _ = writeln!(md, "Multiple exposures: {note}");
            }
            let _ = writeln!(md);
        }
        DelayType::SerialInterval => {
            let _ = writeln!(md, "## Serial-interval notes");
            let _ = writeln!(md);
            match &report.negative_interval_policy {
                Some(p) => {
                    let _ = writeln!(md, "Negative serial intervals: policy `{p}`.");
                }
                None => {
                    let _ = writeln!(md, "Negative serial intervals: policy not stated.");
                }
            }
            if let Some(note) = &report.multiple_infectors_note {
                let _ = writeln!(md, "Multiple possible infectors: {note}");
            }
            let _ = writeln!(md);
        }
        DelayType::Other => {}
    }

    if let Some(note) = &report.other_intervals_note {
        let _ = writeln!(md, "Other transmission intervals: {note}");
        let _ = writeln!(md);
    }

    let _ = writeln!(md, "## Data availability");
    let _ = writeln!(md);
    match &report.data_export {
        Some(export) => {
            let _ = writeln!(
                md,
                "Anonymized linelist: `{}` (hash `{}`).",
                export.path, export.data_hash
            );
        }
        None => {
            let _ = writeln!(md, "Anonymized linelist: not exported.");
        }
    }
    let _ = writeln!(md);

    let score = checklist_score(report);
    let _ = writeln!(md, "## Checklist");
    let _ = writeln!(md);
    let _ = writeln!(
        md,
        "Completeness: {}/{} items ({}).",
        report.checklist.values().filter(|&&v| v).count(),
        report.checklist.len(),
        format_days(score.fraction)
    );
    if !score.missing.is_empty() {
        let _ = writeln!(md);
        let _ = writeln!(md, "### Checklist gaps");
        let _ = writeln!(md);
        for item in &score.missing {
            let _ = writeln!(md, "- {item}");
        }
    }
    let _ = writeln!(md);

    let _ = writeln!(md, "## Provenance");
    let _ = writeln!(md);
    let _ = writeln!(
        md,
        "Seed {}, software version {}, data hash `{}`.",
        report.provenance.seed, report.provenance.version, report.provenance.data_hash
    );
    md
}

/// Renders a report in the requested format.
pub fn render(report: &DelayReport, format: RenderFormat) -> Result<String> {
    match format {
        RenderFormat::Markdown => Ok(render_markdown(report)),
        RenderFormat::Json => render_json(report),
    }
}
