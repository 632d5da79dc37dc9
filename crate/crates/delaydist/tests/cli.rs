//! End-to-end tests of the `delaydist` binary: reproducibility, exit codes
//! and the decision-tree subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delaydist"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn delaydist")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("delaydist-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SCENARIO: &str = r#"{
  "growth_rate": 0.1,
  "duration": 30.0,
  "n_cases": 400,
  "primary_width": 1.0,
  "secondary_width": 1.0,
  "truncation_time": 30.0,
  "true_dist": {"family": "lognormal", "params": {"meanlog": 1.0, "sdlog": 0.5}},
  "seed": 11,
  "delay_name": "incubation period"
}"#;

#[test]
fn check_retrospective_forward_complete_is_censoring_only() {
    let dir = tmpdir("check");
    let out = run(&["check", "--retrospective", "--forward", "--complete"], &dir);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let adj: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(adj["double_censoring"], true);
    assert_eq!(adj["right_truncation"], false);
    assert!(adj["dynamical"].is_null());
}

#[test]
fn check_real_time_forward_adds_truncation() {
    let dir = tmpdir("check2");
    let out = run(&["check", "--real-time", "--forward"], &dir);
    assert!(out.status.success());
    let adj: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(adj["right_truncation"], true);
    assert!(adj["dynamical"].is_null());
}

#[test]
fn check_backward_without_growth_rate_fails_validation() {
    let dir = tmpdir("check3");
    let out = run(&["check", "--retrospective", "--backward"], &dir);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["check", "--retrospective", "--backward", "--growth-rate", "0.2"], &dir);
    assert!(out.status.success());
    let adj: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(adj["dynamical"], 0.2);
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let dir = tmpdir("pipeline");
    std::fs::write(dir.join("scenario.json"), SCENARIO).unwrap();

    for pass in ["a", "b"] {
        let sim = format!("sim_{pass}");
        let fit = format!("fit_{pass}");
        let unadj = format!("unadj_{pass}");
        let cmp = format!("cmp_{pass}");
        let gamma = format!("gamma_{pass}");
        let rep = format!("rep_{pass}");
        assert!(run(
            &["simulate", "--scenario", "scenario.json", "--out", &sim],
            &dir
        )
        .status
        .success());
        assert!(run(
            &[
                "fit", "--linelist", &format!("{sim}/linelist.csv"), "--family", "lognormal",
                "--method", "mle", "--adjust", "censoring,truncation", "--seed", "42",
                "--out", &fit
            ],
            &dir
        )
        .status
        .success());
        assert!(run(
            &[
                "fit", "--linelist", &format!("{sim}/linelist.csv"), "--family", "lognormal",
                "--method", "mle", "--adjust", "censoring", "--seed", "42", "--out", &unadj
            ],
            &dir
        )
        .status
        .success());
        assert!(run(
            &[
                "fit", "--linelist", &format!("{sim}/linelist.csv"), "--family", "gamma",
                "--method", "mle", "--adjust", "censoring,truncation", "--seed", "42",
                "--out", &gamma
            ],
            &dir
        )
        .status
        .success());
        assert!(run(
            &[
                "compare", "--fits", &format!("{fit}/fit.json"), &format!("{gamma}/fit.json"),
                "--out", &cmp
            ],
            &dir
        )
        .status
        .success());
        assert!(run(
            &[
                "report", "--linelist", &format!("{sim}/linelist.csv"),
                "--fit", &format!("{fit}/fit.json"),
                "--unadjusted-fit", &format!("{unadj}/fit.json"),
                "--comparison", &format!("{cmp}/comparison.json"),
                "--other-intervals-note", "none considered",
                "--export-data", "--ppc", "--seed", "42", "--out", &rep
            ],
            &dir
        )
        .status
        .success());
    }

    for file in ["linelist.csv", "truth.csv"] {
        let a = std::fs::read(dir.join("sim_a").join(file)).unwrap();
        let b = std::fs::read(dir.join("sim_b").join(file)).unwrap();
        assert_eq!(a, b, "{file} must be byte-identical");
    }
    for (d, file) in [("rep", "report.json"), ("rep", "report.md"), ("rep", "ppc.csv"), ("cmp", "comparison.json")] {
        let a = std::fs::read(dir.join(format!("{d}_a")).join(file)).unwrap();
        let b = std::fs::read(dir.join(format!("{d}_b")).join(file)).unwrap();
        assert_eq!(a, b, "{file} must be byte-identical");
    }

    // the full-input report reaches checklist 1.0
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("rep_a").join("report.json")).unwrap(),
    )
    .unwrap();
    let checklist = report["checklist"].as_object().unwrap();
    assert!(checklist.values().all(|v| v.as_bool().unwrap()));
}

#[test]
fn unmixed_mcmc_fit_exits_with_code_3() {
    let dir = tmpdir("unmixed");
    std::fs::write(dir.join("scenario.json"), SCENARIO).unwrap();
    assert!(run(
        &["simulate", "--scenario", "scenario.json", "--out", "sim"],
        &dir
    )
    .status
    .success());
    std::fs::write(
        dir.join("options.json"),
        r#"{
  "method": "mcmc",
  "mcmc": {
    "chains": 2, "warmup": 0, "samples": 10,
    "adapt": false, "initial_step": 1e-12,
    "init_overrides": [[10.0, 10.0], [-10.0, -10.0]]
  }
}"#,
    )
    .unwrap();
    let out = run(
        &[
            "fit", "--linelist", "sim/linelist.csv", "--family", "lognormal", "--method", "mcmc",
            "--adjust", "censoring", "--options", "options.json", "--out", "fit",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(3), "nonconvergence must exit 3");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit/fit.json")).unwrap()).unwrap();
    assert_eq!(doc["diagnostics"]["converged"], false);
}

#[test]
fn validation_errors_exit_with_code_2() {
    let dir = tmpdir("badinput");
    // missing linelist file
    let out = run(
        &["fit", "--linelist", "nope.csv", "--family", "gamma", "--out", "x"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));

    // truncation without an observation time
    std::fs::write(
        dir.join("ll.csv"),
        "id,primary_window,secondary_window\nc1,0:1,3:4\nc2,1:2,4:5\nc3,0:1,2:3\nc4,2:3,6:7\n",
    )
    .unwrap();
    let out = run(
        &[
            "fit", "--linelist", "ll.csv", "--family", "gamma", "--adjust",
            "censoring,truncation", "--out", "x",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));

    // malformed row, reported with its number
    std::fs::write(
        dir.join("bad.csv"),
        "id,primary_window,secondary_window\nc1,0:1,3:4\nc2,5:4,6:7\n",
    )
    .unwrap();
    let out = run(
        &["fit", "--linelist", "bad.csv", "--family", "gamma", "--out", "x"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("row 2"), "stderr: {err}");
}

#[test]
fn explicit_adjustments_override_context_with_warning() {
    let dir = tmpdir("override");
    std::fs::write(dir.join("scenario.json"), SCENARIO).unwrap();
    assert!(run(
        &["simulate", "--scenario", "scenario.json", "--out", "sim"],
        &dir
    )
    .status
    .success());
    let out = run(
        &[
            "fit", "--linelist", "sim/linelist.csv", "--family", "lognormal",
            "--adjust", "censoring", "--real-time", "--forward", "--out", "fit",
        ],
        &dir,
    );
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("warning"), "expected contradiction warning, got: {err}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit/fit.json")).unwrap()).unwrap();
    assert_eq!(doc["adjustments"]["right_truncation"], false);
}

#[test]
fn sbc_runs_and_summarizes() {
    let dir = tmpdir("sbc");
    std::fs::write(
        dir.join("sbc.json"),
        r#"{
  "scenario": {
    "growth_rate": 0.0, "duration": 25.0, "n_cases": 300,
    "primary_width": 1.0, "secondary_width": 1.0, "truncation_time": null,
    "true_dist": {"family": "gamma", "params": {"shape": 2.0, "rate": 0.5}},
    "seed": 100, "delay_name": "delay"
  },
  "family": "gamma",
  "adjust": "censoring",
  "options": {"method": "mle", "ci_level": 0.9},
  "replicates": 10
}"#,
    )
    .unwrap();
    let out = run(&["sbc", "--config", "sbc.json", "--out", "sbc_out"], &dir);
    assert!(out.status.success(), "sbc failed: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("sbc_out/sbc_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["replicates"], 10);
    // 90% intervals on clean data: lose at most a few of 10
    assert!(summary["coverage_count"].as_u64().unwrap() >= 6);
    let rows = std::fs::read_to_string(dir.join("sbc_out/sbc_results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 11);
}

#[test]
fn help_lists_every_subcommand() {
    let dir = tmpdir("help");
    let out = run(&["--help"], &dir);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["simulate", "fit", "compare", "report", "check", "sbc"] {
        assert!(text.contains(sub), "--help must list {sub}");
    }
    // per-subcommand help enumerates the flags it consumes
    let out = run(&["fit", "--help"], &dir);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--linelist", "--family", "--method", "--adjust", "--T", "--seed", "--ci", "--out"] {
        assert!(text.contains(flag), "fit --help must list {flag}");
    }
}
