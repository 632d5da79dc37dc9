//! Cross-module inference invariants that need simulated data: the bias
//! ordering of the three estimators on a growing truncated epidemic, and
//! exact scale equivariance of the maximum-likelihood fit.

use delaydist::distributions::{DelayFamily, FamilyKind};
use delaydist::inference::{fit_mle, AdjustmentSet, FitOptions};
use delaydist::linelist::{CaseRecord, EventWindow, Linelist, Segment};
use delaydist::synthdata::{simulate_linelist, ObservationProcess, OutbreakScenario};

fn naive_mean(linelist: &Linelist) -> f64 {
    let delays = linelist.naive_delays().unwrap();
    delays.iter().sum::<f64>() / delays.len() as f64
}

/// Growing epidemic, heavy truncation, fixed seed: the naive mean sits below
/// the censoring-only fit, which sits below the truth, which the
/// censoring+truncation interval covers.
#[test]
fn bias_ordering_on_truncated_growing_epidemic() {
    let sdlog: f64 = 0.5;
    let meanlog = 10f64.ln() - 0.5 * sdlog * sdlog;
    let true_mean = 10.0;
    let scenario = OutbreakScenario {
        process: ObservationProcess {
            growth_rate: 0.3,
            duration: 21.0,
            n_cases: 2000,
            primary_width: 1.0,
            secondary_width: 1.0,
            truncation_time: Some(21.0),
        },
        true_dist: DelayFamily::lognormal(meanlog, sdlog).unwrap(),
        seed: 4005,
        delay_name: "delay".into(),
    };
    let (linelist, _) = simulate_linelist(&scenario).unwrap();

    let naive = naive_mean(&linelist);
    let censoring_only = fit_mle(
        &linelist,
        FamilyKind::Lognormal,
        &AdjustmentSet::censoring_only(),
        &FitOptions::default(),
    )
    .unwrap();
    let adjusted = fit_mle(
        &linelist,
        FamilyKind::Lognormal,
        &AdjustmentSet::with_truncation(),
        &FitOptions::default(),
    )
    .unwrap();

    let cens_mean = censoring_only.summary.mean.value;
    assert!(
        naive + 0.01 < cens_mean,
        "naive {naive} should sit below the censoring-only mean {cens_mean} with margin"
    );
    assert!(
        cens_mean + 1.0 < true_mean,
        "censoring-only mean {cens_mean} should stay well below the truth {true_mean}"
    );
    assert!(
        true_mean <= adjusted.summary.mean.upper.unwrap(),
        "adjusted upper bound {} must reach the truth",
        adjusted.summary.mean.upper.unwrap()
    );
}

fn scale_linelist(linelist: &Linelist, c: f64) -> Linelist {
    let cases: Vec<CaseRecord> = linelist
        .cases()
        .iter()
        .map(|case| CaseRecord {
            id: case.id.clone(),
            primary: EventWindow::new(
                case.primary
                    .segments()
                    .iter()
                    .map(|s| Segment {
                        lo: s.lo * c,
                        hi: s.hi * c,
                    })
                    .collect(),
            )
            .unwrap(),
            secondary: EventWindow::new(
                case.secondary
                    .segments()
                    .iter()
                    .map(|s| Segment {
                        lo: s.lo * c,
                        hi: s.hi * c,
                    })
                    .collect(),
            )
            .unwrap(),
            strata: case.strata.clone(),
            pair_order_known: case.pair_order_known,
        })
        .collect();
    Linelist::new(
        cases,
        linelist.observation_time().map(|t| t * c),
        linelist.allow_negative(),
        linelist.delay_name().to_string(),
    )
    .unwrap()
}

/// Scaling every time by c scales the fitted mean and sd by c.
#[test]
fn mle_scale_equivariance() {
    let scenario = OutbreakScenario {
        process: ObservationProcess {
            growth_rate: 0.1,
            duration: 30.0,
            n_cases: 2000,
            primary_width: 1.0,
            secondary_width: 1.0,
            truncation_time: Some(30.0),
        },
        true_dist: DelayFamily::gamma(2.0, 0.5).unwrap(),
        seed: 88,
        delay_name: "delay".into(),
    };
    let (linelist, _) = simulate_linelist(&scenario).unwrap();
    let c = 2.5;
    let scaled = scale_linelist(&linelist, c);

    for (family, adj) in [
        (FamilyKind::Gamma, AdjustmentSet::with_truncation()),
        (FamilyKind::Lognormal, AdjustmentSet::censoring_only()),
        (FamilyKind::Weibull, AdjustmentSet::censoring_only()),
        (FamilyKind::Normal, AdjustmentSet::censoring_only()),
    ] {
        let base = fit_mle(&linelist, family, &adj, &FitOptions::default()).unwrap();
        let big = fit_mle(&scaled, family, &adj, &FitOptions::default()).unwrap();
        let mean_ratio = big.summary.mean.value / base.summary.mean.value;
        let sd_ratio = big.summary.sd.value / base.summary.sd.value;
        assert!(
            (mean_ratio - c).abs() / c < 1e-6,
            "{family:?}: mean ratio {mean_ratio} vs {c}"
        );
        assert!(
            (sd_ratio - c).abs() / c < 1e-6,
            "{family:?}: sd ratio {sd_ratio} vs {c}"
        );

        // natural parameters transform accordingly
        match (base.dist, big.dist) {
            (
                DelayFamily::Gamma { shape: k1, rate: b1 },
                DelayFamily::Gamma { shape: k2, rate: b2 },
            ) => {
                assert!((k1 - k2).abs() / k1 < 1e-6, "gamma shape invariant");
                assert!((b1 / b2 - c).abs() / c < 1e-6, "gamma rate scales as 1/c");
            }
            (
                DelayFamily::Weibull { shape: k1, scale: l1 },
                DelayFamily::Weibull { shape: k2, scale: l2 },
            ) => {
                assert!((k1 - k2).abs() / k1 < 1e-6, "weibull shape invariant");
                assert!((l2 / l1 - c).abs() / c < 1e-6, "weibull scale scales as c");
            }
            (
                DelayFamily::Normal { mean: m1, sd: s1 },
                DelayFamily::Normal { mean: m2, sd: s2 },
            ) => {
                assert!((m2 / m1 - c).abs() / c < 1e-6, "normal mean scales");
                assert!((s2 / s1 - c).abs() / c < 1e-6, "normal sd scales");
            }
            _ => {}
        }
    }
}
