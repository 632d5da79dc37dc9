//! Command-line interface: reproducible delay-distribution workflows.
//!
//! Exit codes: 0 success, 2 validation/input error, 3 success with
//! nonconvergence flags.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use delaydist::distributions::FamilyKind;
use delaydist::inference::{
    compare_models, decide_adjustments, fit_mcmc, fit_mle, AdjustmentSet, ComparisonTable,
    DecisionContext, FitDocument, FitMethod, FitOptions, FitResult, PrimaryPrior,
};
use delaydist::linelist::{
    epidemic_curve, estimate_growth_rate, write_linelist, CohortDirection, CurveEvent,
    GrowthEstimate, Linelist, LinelistMeta,
};
use delaydist::reporting::{
    build_report, checklist_score, ppc_data, render_json, render_markdown, DataExportRef,
    DelayType, ReportConfig,
};
use delaydist::synthdata::{simulate_linelist, ObservationProcess, OutbreakScenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "delaydist",
    version,
    about = "Estimate and report epidemiological delay distributions from interval-censored, right-truncated linelists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic outbreak linelist with known ground truth.
    Simulate(SimulateArgs),
    /// Fit a delay distribution to a linelist.
    Fit(FitArgs),
    /// Rank fitted models by information criterion.
    Compare(CompareArgs),
    /// Build the reporting-checklist document for a fit.
    Report(ReportArgs),
    /// Print the bias adjustments the decision tree selects for a context.
    Check(CheckArgs),
    /// Simulation-based calibration: repeated simulate-fit cycles with
    /// coverage and bias summaries.
    Sbc(SbcArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config (JSON: growth_rate, duration, n_cases, true_dist,
    /// primary_width, secondary_width, truncation_time, seed, delay_name).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for linelist.csv, its metadata sidecar and truth.csv.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Widen exported windows by this many days on each side (privacy).
    #[arg(long, default_value_t = 0.0)]
    widen: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Gamma,
    Lognormal,
    Weibull,
    Normal,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> FamilyKind {
        match f {
            FamilyArg::Gamma => FamilyKind::Gamma,
            FamilyArg::Lognormal => FamilyKind::Lognormal,
            FamilyArg::Weibull => FamilyKind::Weibull,
            FamilyArg::Normal => FamilyKind::Normal,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Mle,
    Mcmc,
}

#[derive(Args, Clone)]
struct ContextFlags {
    /// Analysis runs while the outbreak is still being observed.
    #[arg(long, conflicts_with = "retrospective")]
    real_time: bool,
    /// Analysis of a closed, fully observed dataset.
    #[arg(long)]
    retrospective: bool,
    /// Cohort by primary event (the forward distribution).
    #[arg(long, conflicts_with = "backward")]
    forward: bool,
    /// Cohort by secondary event (the backward distribution).
    #[arg(long)]
    backward: bool,
    /// Epidemic growth rate estimate (per day), enabling dynamical correction.
    #[arg(long)]
    growth_rate: Option<f64>,
    /// Surveillance stopped before all secondary events could occur.
    #[arg(long, conflicts_with = "complete")]
    ended_early: bool,
    /// Surveillance covered the whole outbreak.
    #[arg(long)]
    complete: bool,
}

impl ContextFlags {
    fn to_context(&self) -> DecisionContext {
        DecisionContext {
            real_time: self.real_time,
            modeling_direction: if self.backward {
                CohortDirection::Backward
            } else {
                CohortDirection::Forward
            },
            growth_rate: self.growth_rate,
            surveillance_ended_early: self.ended_early,
        }
    }

    fn any_set(&self) -> bool {
        self.real_time
            || self.retrospective
            || self.forward
            || self.backward
            || self.growth_rate.is_some()
            || self.ended_early
            || self.complete
    }
}

#[derive(Args)]
struct FitArgs {
    /// Linelist CSV (reads `<path>.meta.json` sidecar when present).
    #[arg(long)]
    linelist: PathBuf,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "mle")]
    method: MethodArg,
    /// Explicit adjustments: comma-separated from {censoring, truncation,
    /// dynamical:R}; wins over the decision-tree context flags.
    #[arg(long)]
    adjust: Option<String>,
    /// Within-window prior for the latent primary event time:
    /// `uniform` (default) or `growth:R` to weight by e^{R·t}.
    #[arg(long, default_value = "uniform")]
    primary_prior: String,
    #[command(flatten)]
    context: ContextFlags,
    /// Observation time T in days (overrides the linelist sidecar).
    #[arg(long = "T")]
    observation_time: Option<f64>,
    #[arg(long, default_value_t = delaydist::DEFAULT_SEED)]
    seed: u64,
    /// Interval level, e.g. 0.95.
    #[arg(long, default_value_t = 0.95)]
    ci: f64,
    /// Fit options file (JSON mirror of every option).
    #[arg(long)]
    options: Option<PathBuf>,
    /// Output directory (fit.json, draws.csv for MCMC).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more fit.json documents over the same data and adjustments.
    #[arg(long, num_args = 2.., required = true)]
    fits: Vec<PathBuf>,
    /// Output directory (comparison.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    linelist: PathBuf,
    /// The fit to report (fit.json).
    #[arg(long)]
    fit: PathBuf,
    /// Right-truncation-unadjusted companion fit (fit.json).
    #[arg(long)]
    unadjusted_fit: Option<PathBuf>,
    /// Model-comparison table (comparison.json).
    #[arg(long)]
    comparison: Option<PathBuf>,
    /// Skip the epidemic curve and growth estimate.
    #[arg(long)]
    no_curve: bool,
    /// Delay type for checklist applicability; inferred from the delay name
    /// when omitted (incubation|serial-interval|other).
    #[arg(long)]
    delay_type: Option<String>,
    /// Statement on other transmission intervals considered.
    #[arg(long)]
    other_intervals_note: Option<String>,
    /// Control measures in place during the study period.
    #[arg(long)]
    control_measures: Option<String>,
    /// Negative-serial-interval policy that was applied.
    #[arg(long)]
    negative_policy: Option<String>,
    /// How multiple possible infectors were handled.
    #[arg(long)]
    multiple_infectors_note: Option<String>,
    /// Export the anonymized linelist next to the report.
    #[arg(long)]
    export_data: bool,
    /// Widen exported windows by this many days on each side (privacy).
    #[arg(long, default_value_t = 0.0)]
    widen: f64,
    /// Also write posterior-predictive-check data (ppc.csv).
    #[arg(long)]
    ppc: bool,
    #[arg(long, default_value_t = delaydist::DEFAULT_SEED)]
    seed: u64,
    /// Output directory (report.json, report.md, optional linelist.csv, ppc.csv).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    context: ContextFlags,
}

#[derive(Args)]
struct SbcArgs {
    /// Calibration config (JSON: scenario, family, adjust, fit options,
    /// replicates).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Report(args) => cmd_report(args),
        Command::Check(args) => cmd_check(args),
        Command::Sbc(args) => cmd_sbc(args),
    };
    match outcome {
        Ok(flagged) => {
            if flagged {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_linelist(path: &Path, observation_time_override: Option<f64>) -> Result<Linelist> {
    let sidecar = LinelistMeta::sidecar_path(path);
    let mut meta = if sidecar.exists() {
        LinelistMeta::read_path(&sidecar)?
    } else {
        LinelistMeta::default()
    };
    if let Some(t) = observation_time_override {
        meta.observation_time = Some(t);
    }
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(delaydist::linelist::ingest_csv_reader(file, &meta)?)
}

// each cmd_* returns true when the result carries nonconvergence flags

fn cmd_simulate(args: SimulateArgs) -> Result<bool> {
    let mut scenario: OutbreakScenario = read_json(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if args.widen < 0.0 {
        bail!("--widen must be nonnegative");
    }
    let (linelist, truth) = simulate_linelist(&scenario)?;

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("linelist.csv");
    let file = std::fs::File::create(&csv_path)?;
    write_linelist(&linelist, file, args.widen)?;
    let meta = LinelistMeta {
        delay_name: scenario.delay_name.clone(),
        observation_time: linelist.observation_time(),
        allow_negative: linelist.allow_negative(),
        time_unit: "days".into(),
        epoch: None,
    };
    meta.write_path(&LinelistMeta::sidecar_path(&csv_path))?;
    let truth_file = std::fs::File::create(args.out.join("truth.csv"))?;
    truth.write_csv(truth_file)?;

    println!(
        "simulated {} cases ({} observed) into {}",
        truth.records.len(),
        linelist.len(),
        args.out.display()
    );
    Ok(false)
}

fn parse_adjust(spec: &str) -> Result<AdjustmentSet> {
    let mut truncation = false;
    let mut dynamical = None;
    let mut censoring_named = false;
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part == "censoring" {
            censoring_named = true;
        } else if part == "truncation" {
            truncation = true;
        } else if let Some(rate) = part.strip_prefix("dynamical:") {
            dynamical = Some(
                rate.parse::<f64>()
                    .map_err(|_| anyhow!("bad dynamical rate '{rate}'"))?,
            );
        } else {
            bail!("unknown adjustment '{part}' (expected censoring, truncation or dynamical:R)");
        }
    }
    if !censoring_named && !truncation && dynamical.is_none() {
        bail!("empty adjustment spec");
    }
    Ok(AdjustmentSet::new(
        truncation,
        dynamical,
        PrimaryPrior::Uniform,
    )?)
}

fn resolve_adjustments(explicit: Option<&str>, context: &ContextFlags) -> Result<AdjustmentSet> {
    match explicit {
        Some(spec) => {
            let adj = parse_adjust(spec)?;
            if context.any_set() {
                if let Ok(derived) = decide_adjustments(&context.to_context()) {
                    if derived != adj {
                        eprintln!(
                            "warning: explicit adjustments ({}) contradict the decision tree \
                             for this context ({}); using the explicit set",
                            adj.label(),
                            derived.label()
                        );
                    }
                }
            }
            Ok(adj)
        }
        None => Ok(decide_adjustments(&context.to_context())?),
    }
}

fn run_fit(
    linelist: &Linelist,
    family: FamilyKind,
    adj: &AdjustmentSet,
    options: &FitOptions,
) -> Result<FitResult> {
    Ok(match options.method {
        FitMethod::Mle => fit_mle(linelist, family, adj, options)?,
        FitMethod::Mcmc => fit_mcmc(linelist, family, adj, options)?,
    })
}

fn parse_primary_prior(spec: &str) -> Result<PrimaryPrior> {
    if spec == "uniform" {
        Ok(PrimaryPrior::Uniform)
    } else if let Some(rate) = spec.strip_prefix("growth:") {
        Ok(PrimaryPrior::GrowthTilted(
            rate.parse::<f64>()
                .map_err(|_| anyhow!("bad growth rate '{rate}' in --primary-prior"))?,
        ))
    } else {
        bail!("unknown primary prior '{spec}' (expected uniform or growth:R)");
    }
}

fn cmd_fit(args: FitArgs) -> Result<bool> {
    let linelist = load_linelist(&args.linelist, args.observation_time)?;
    let adj = resolve_adjustments(args.adjust.as_deref(), &args.context)?
        .with_primary_prior(parse_primary_prior(&args.primary_prior)?);

    let mut options: FitOptions = match &args.options {
        Some(path) => read_json(path)?,
        None => FitOptions::default(),
    };
    options.method = match args.method {
        MethodArg::Mle => FitMethod::Mle,
        MethodArg::Mcmc => FitMethod::Mcmc,
    };
    options.ci_level = args.ci;
    options.mcmc.seed = args.seed;

    let fit = run_fit(&linelist, args.family.into(), &adj, &options)?;

    std::fs::create_dir_all(&args.out)?;
    write_json(&fit.document(), &args.out.join("fit.json"))?;
    if fit.draws.is_some() {
        let file = std::fs::File::create(args.out.join("draws.csv"))?;
        fit.write_draws_csv(file)?;
    }

    let flagged = !fit.diagnostics.converged;
    println!(
        "fit {} ({}, {}): mean {:.4}, sd {:.4}{}",
        fit.family,
        fit.method,
        fit.adjustments.label(),
        fit.summary.mean.value,
        fit.summary.sd.value,
        if flagged { " [NOT CONVERGED]" } else { "" }
    );
    Ok(flagged)
}

fn cmd_compare(args: CompareArgs) -> Result<bool> {
    let docs: Vec<FitDocument> = args
        .fits
        .iter()
        .map(|p| read_json(p))
        .collect::<Result<_>>()?;
    let table = compare_models(&docs)?;
    std::fs::create_dir_all(&args.out)?;
    write_json(&table, &args.out.join("comparison.json"))?;
    println!("rank by {}:", table.criterion);
    for (i, row) in table.rows.iter().enumerate() {
        println!(
            "  {}. {} {}={:.3} delta={:.3}",
            i + 1,
            row.family,
            table.criterion,
            row.criterion_value,
            row.delta
        );
    }
    Ok(false)
}

fn cmd_report(args: ReportArgs) -> Result<bool> {
    let linelist = load_linelist(&args.linelist, None)?;
    let fit: FitDocument = read_json(&args.fit)?;

    let (curve, growth) = if args.no_curve {
        (None, None)
    } else {
        let curve = epidemic_curve(&linelist, CurveEvent::Primary)?;
        let window = (curve.start_day, curve.end_day());
        let growth: Option<GrowthEstimate> = estimate_growth_rate(&curve, window).ok();
        (Some(curve), growth)
    };

    std::fs::create_dir_all(&args.out)?;
    let data_export = if args.export_data {
        if args.widen < 0.0 {
            bail!("--widen must be nonnegative");
        }
        let path = args.out.join("linelist.csv");
        let file = std::fs::File::create(&path)?;
        write_linelist(&linelist, file, args.widen)?;
        Some(DataExportRef {
            path: "linelist.csv".into(),
            data_hash: linelist.data_hash(),
        })
    } else {
        None
    };

    let delay_type = match args.delay_type.as_deref() {
        Some("incubation") => Some(DelayType::Incubation),
        Some("serial-interval" | "serial_interval") => Some(DelayType::SerialInterval),
        Some("other") => Some(DelayType::Other),
        Some(other) => bail!("unknown delay type '{other}'"),
        None => None,
    };

    let config = ReportConfig {
        delay_type,
        unadjusted_summary: match &args.unadjusted_fit {
            Some(path) => {
                let doc: FitDocument = read_json(path)?;
                if doc.provenance.data_hash != linelist.data_hash() {
                    bail!("unadjusted fit comes from a different dataset");
                }
                Some(doc.summary)
            }
            None => None,
        },
        comparison: match &args.comparison {
            Some(path) => Some(read_json::<ComparisonTable>(path)?),
            None => None,
        },
        other_intervals_note: args.other_intervals_note.clone(),
        control_measures: args.control_measures.clone(),
        negative_interval_policy: args.negative_policy.clone(),
        multiple_infectors_note: args.multiple_infectors_note.clone(),
        data_export,
    };

    let report = build_report(&fit, &linelist, curve.as_ref(), growth, &config)?;
    std::fs::write(args.out.join("report.json"), render_json(&report)?)?;
    std::fs::write(args.out.join("report.md"), render_markdown(&report))?;

    if args.ppc {
        let process = observation_process_of(&linelist, growth)?;
        let ppc = ppc_data(&fit.point, &linelist, &process, args.seed)?;
        let file = std::fs::File::create(args.out.join("ppc.csv"))?;
        ppc.write_csv(file)?;
    }

    let score = checklist_score(&report);
    println!(
        "report written: checklist {:.3} complete{}",
        score.fraction,
        if score.missing.is_empty() {
            String::new()
        } else {
            format!(", missing: {}", score.missing.join(", "))
        }
    );
    Ok(false)
}

/// Reconstructs the observation process implied by a linelist for
/// posterior-predictive simulation: median window widths, primary-event
/// range, growth estimate and the recorded cutoff.
fn observation_process_of(
    linelist: &Linelist,
    growth: Option<GrowthEstimate>,
) -> Result<ObservationProcess> {
    if linelist.is_empty() {
        bail!("empty linelist");
    }
    let mut primary_widths: Vec<f64> = linelist
        .cases()
        .iter()
        .map(|c| c.primary.measure())
        .collect();
    let mut secondary_widths: Vec<f64> = linelist
        .cases()
        .iter()
        .map(|c| c.secondary.measure())
        .collect();
    primary_widths.sort_by(f64::total_cmp);
    secondary_widths.sort_by(f64::total_cmp);
    let median = |v: &[f64]| v[v.len() / 2];
    let start = linelist
        .cases()
        .iter()
        .map(|c| c.primary.lower())
        .fold(f64::INFINITY, f64::min);
    let end = linelist
        .cases()
        .iter()
        .map(|c| c.primary.upper())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ObservationProcess {
        growth_rate: growth.map_or(0.0, |g| g.rate),
        duration: (end - start).max(1.0),
        n_cases: (linelist.len() * 25).max(10_000),
        primary_width: median(&primary_widths),
        secondary_width: median(&secondary_widths),
        truncation_time: linelist.observation_time().map(|t| t - start),
    })
}

fn cmd_check(args: CheckArgs) -> Result<bool> {
    let adj = decide_adjustments(&args.context.to_context())?;
    let mut text = serde_json::to_string_pretty(&adj)?;
    text.push('\n');
    print!("{text}");
    Ok(false)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SbcConfig {
    scenario: OutbreakScenario,
    family: FamilyKind,
    /// Adjustment spec string, e.g. "censoring,truncation".
    adjust: String,
    #[serde(default)]
    options: FitOptions,
    replicates: usize,
    /// Families ranked per replicate when present (model-selection check).
    #[serde(default)]
    comparison_families: Vec<FamilyKind>,
}

#[derive(serde::Serialize)]
struct SbcSummary {
    replicates: usize,
    converged: usize,
    true_mean: f64,
    coverage_count: usize,
    coverage_rate: f64,
    mean_relative_bias: f64,
    selection_count: Option<usize>,
}

fn cmd_sbc(args: SbcArgs) -> Result<bool> {
    let mut config: SbcConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        config.scenario.seed = seed;
    }
    if config.replicates == 0 {
        bail!("replicates must be >= 1");
    }
    let adj = parse_adjust(&config.adjust)?;
    let true_mean = config.scenario.true_dist.mean();

    std::fs::create_dir_all(&args.out)?;
    let mut rows = csv::Writer::from_path(args.out.join("sbc_results.csv"))?;
    rows.write_record([
        "replicate",
        "seed",
        "n_observed",
        "mean",
        "lower",
        "upper",
        "covered",
        "converged",
        "selected_family",
    ])?;

    let mut covered = 0usize;
    let mut converged = 0usize;
    let mut bias_acc = 0.0;
    let mut selection_count = 0usize;
    let mut any_flagged = false;

    for rep in 0..config.replicates {
        let mut scenario = config.scenario.clone();
        scenario.seed = config.scenario.seed.wrapping_add(rep as u64);
        let (linelist, _) = simulate_linelist(&scenario)?;

        let mut options = config.options.clone();
        options.mcmc.seed = scenario.seed.wrapping_mul(2654435761).wrapping_add(1);
        let fit = run_fit(&linelist, config.family, &adj, &options)?;

        let mean = fit.summary.mean;
        let is_covered = match (mean.lower, mean.upper) {
            (Some(lo), Some(hi)) => lo <= true_mean && true_mean <= hi,
            _ => false,
        };
        covered += is_covered as usize;
        converged += fit.diagnostics.converged as usize;
        any_flagged |= !fit.diagnostics.converged;
        bias_acc += (mean.value - true_mean) / true_mean;

        let selected = if config.comparison_families.len() >= 2 {
            let mut docs = Vec::new();
            for family in &config.comparison_families {
                let mut mle_options = options.clone();
                mle_options.method = FitMethod::Mle;
                docs.push(run_fit(&linelist, *family, &adj, &mle_options)?.document());
            }
            let table = compare_models(&docs)?;
            let best = table.rows[0].family;
            if best == config.scenario.true_dist.kind() {
                selection_count += 1;
            }
            Some(best)
        } else {
            None
        };

        rows.write_record([
            rep.to_string(),
            scenario.seed.to_string(),
            linelist.len().to_string(),
            format!("{:.9}", mean.value),
            mean.lower.map_or(String::new(), |v| format!("{v:.9}")),
            mean.upper.map_or(String::new(), |v| format!("{v:.9}")),
            is_covered.to_string(),
            fit.diagnostics.converged.to_string(),
            selected.map_or(String::new(), |f| f.to_string()),
        ])?;
    }
    rows.flush()?;

    let summary = SbcSummary {
        replicates: config.replicates,
        converged,
        true_mean,
        coverage_count: covered,
        coverage_rate: covered as f64 / config.replicates as f64,
        mean_relative_bias: bias_acc / config.replicates as f64,
        selection_count: if config.comparison_families.len() >= 2 {
            Some(selection_count)
        } else {
            None
        },
    };
    write_json(&summary, &args.out.join("sbc_summary.json"))?;
    println!(
        "sbc: {}/{} intervals covered the true mean {:.4}; {} converged",
        covered, config.replicates, true_mean, converged
    );
    Ok(any_flagged)
}
