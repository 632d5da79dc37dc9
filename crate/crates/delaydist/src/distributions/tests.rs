use super::*;
use crate::distributions::convert::{params_from_summary, summary_from_params};
use crate::distributions::tilt::tilt;
use approx::{assert_abs_diff_eq, assert_relative_eq};

// Frozen with a 30-digit arbitrary-precision oracle (closed-form moments and
// normalizer integrals evaluated independently of this crate).
const LN_1_05_MEAN: f64 = 3.0802168489180312; // exp(1 + 0.5²/2)
const LN_1_05_SD: f64 = 1.6415718456238666; // mean·sqrt(exp(0.25)−1)
const GAMMA_TILT_LOGZ: f64 = -0.3646431135879093; // 2·ln(5/6)
const EXP_CDF_AT_MEAN: f64 = 0.6321205588285577; // 1 − e^{−1}
const EXP_MEDIAN: f64 = 3.4657359027997265; // 5·ln 2
const PHI_0: f64 = 0.3989422804014327;

/// Composite Simpson rule, the test-side integration oracle. Deliberately
/// independent of `numeric::quadrature`.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn params_from_summary_gamma_exponential() {
    // cv = 1 collapses the gamma to an exponential
    let d = params_from_summary(FamilyKind::Gamma, 5.0, 5.0).unwrap();
    let [shape, rate] = d.params();
    assert_relative_eq!(shape, 1.0, max_relative = 1e-12);
    assert_relative_eq!(rate, 0.2, max_relative = 1e-12);
}

#[test]
fn params_from_summary_normal_identity() {
    let d = params_from_summary(FamilyKind::Normal, 2.0, 3.0).unwrap();
    assert_eq!(d, DelayFamily::Normal { mean: 2.0, sd: 3.0 });
}

#[test]
fn params_from_summary_lognormal_inverts_moments() {
    let d = params_from_summary(FamilyKind::Lognormal, LN_1_05_MEAN, LN_1_05_SD).unwrap();
    let [meanlog, sdlog] = d.params();
    assert_relative_eq!(meanlog, 1.0, max_relative = 1e-12);
    assert_relative_eq!(sdlog, 0.5, max_relative = 1e-12);
}

#[test]
fn params_from_summary_rejects_degenerate_sd() {
    assert!(params_from_summary(FamilyKind::Gamma, 5.0, 0.0).is_err());
    assert!(params_from_summary(FamilyKind::Normal, 5.0, -1.0).is_err());
    assert!(params_from_summary(FamilyKind::Weibull, -2.0, 1.0).is_err());
    assert!(params_from_summary(FamilyKind::Lognormal, 0.0, 1.0).is_err());
}

#[test]
fn summary_from_params_lognormal() {
    let d = DelayFamily::lognormal(1.0, 0.5).unwrap();
    let s = summary_from_params(&d, &[]).unwrap();
    assert_relative_eq!(s.mean, LN_1_05_MEAN, max_relative = 1e-12);
    assert_relative_eq!(s.sd, LN_1_05_SD, max_relative = 1e-12);
}

#[test]
fn summary_from_params_gamma() {
    let d = DelayFamily::gamma(2.0, 0.5).unwrap();
    let s = summary_from_params(&d, &[]).unwrap();
    assert_relative_eq!(s.mean, 4.0, max_relative = 1e-12);
    assert_relative_eq!(s.sd, 2.8284271247461903, max_relative = 1e-12);
}

#[test]
fn summary_near_degenerate_lognormal() {
    let d = DelayFamily::lognormal(0.0, 1e-9).unwrap();
    let s = summary_from_params(&d, &[]).unwrap();
    assert_abs_diff_eq!(s.mean, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.sd, 0.0, epsilon = 1e-8);
}

#[test]
fn eval_examples() {
    let n = DelayFamily::normal(0.0, 1.0).unwrap();
    assert_abs_diff_eq!(n.pdf(0.0), PHI_0, epsilon = 1e-12);
    assert_abs_diff_eq!(n.cdf(0.0), 0.5, epsilon = 1e-12);

    let g = DelayFamily::gamma(1.0, 0.2).unwrap();
    assert_abs_diff_eq!(g.cdf(5.0), EXP_CDF_AT_MEAN, epsilon = 1e-12);

    let ln = DelayFamily::lognormal(0.3, 1.2).unwrap();
    assert_eq!(ln.pdf(-1.0), 0.0);
    assert_eq!(ln.cdf(-1.0), 0.0);
    assert_eq!(ln.ln_pdf(-1.0), f64::NEG_INFINITY);
}

#[test]
fn quantile_examples() {
    let ln = DelayFamily::lognormal(1.0, 0.5).unwrap();
    assert_abs_diff_eq!(ln.quantile(0.5).unwrap(), std::f64::consts::E, epsilon = 1e-9);

    let g = DelayFamily::gamma(1.0, 0.2).unwrap();
    assert_abs_diff_eq!(g.quantile(0.5).unwrap(), EXP_MEDIAN, epsilon = 1e-9);

    let n = DelayFamily::normal(-2.5, 1.7).unwrap();
    assert_abs_diff_eq!(n.quantile(0.5).unwrap(), -2.5, epsilon = 1e-9);

    assert!(n.quantile(0.0).is_err());
    assert!(n.quantile(1.0).is_err());
}

#[test]
fn quantile_inverts_cdf_on_grid() {
    let dists = [
        DelayFamily::gamma(2.0, 0.5).unwrap(),
        DelayFamily::gamma(0.7, 1.3).unwrap(),
        DelayFamily::lognormal(1.0, 0.5).unwrap(),
        DelayFamily::weibull(1.8, 6.0).unwrap(),
        DelayFamily::normal(5.0, 2.0).unwrap(),
    ];
    for d in &dists {
        for i in 1..40 {
            let x = d.mean() + d.sd() * (i as f64 / 10.0 - 2.0);
            if x <= d.support_lower() {
                continue;
            }
            let p = d.cdf(x);
            if p <= 1e-14 || p >= 1.0 - 1e-14 {
                continue;
            }
            let back = d.quantile(p).unwrap();
            assert_abs_diff_eq!(back, x, epsilon = 1e-6);
        }
    }
}

#[test]
fn sample_empty_and_deterministic() {
    let d = DelayFamily::gamma(2.0, 0.5).unwrap();
    assert!(d.sample(0, 7).is_empty());
    assert_eq!(d.sample(100, 7), d.sample(100, 7));
    assert_ne!(d.sample(100, 7), d.sample(100, 8));
}

#[test]
fn sample_mean_within_clt_bound() {
    let d = DelayFamily::gamma(2.0, 0.5).unwrap();
    let xs = d.sample(100_000, 1);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let bound = 4.0 * d.sd() / (xs.len() as f64).sqrt();
    assert!(
        (mean - 4.0).abs() < bound,
        "sample mean {mean} departs from 4.0 by more than {bound}"
    );
}

#[test]
fn monte_carlo_moments_all_families() {
    let dists = [
        DelayFamily::gamma(2.0, 0.5).unwrap(),
        DelayFamily::lognormal(1.0, 0.5).unwrap(),
        DelayFamily::weibull(1.5, 4.0).unwrap(),
        DelayFamily::normal(3.0, 1.5).unwrap(),
    ];
    let n = 100_000usize;
    for (i, d) in dists.iter().enumerate() {
        let xs = d.sample(n, 1000 + i as u64);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se_mean = d.sd() / (n as f64).sqrt();
        assert!(
            (mean - d.mean()).abs() < 5.0 * se_mean,
            "{:?}: mean {mean} vs {}",
            d.kind(),
            d.mean()
        );
        // crude but sufficient sd-of-sd bound
        let se_sd = d.sd() / (2.0 * n as f64).sqrt() * 3.0;
        assert!(
            (var.sqrt() - d.sd()).abs() < 5.0 * se_sd,
            "{:?}: sd {} vs {}",
            d.kind(),
            var.sqrt(),
            d.sd()
        );
    }
}

#[test]
fn tilt_gamma_closed_form() {
    let d = DelayFamily::gamma(2.0, 0.5).unwrap();
    let t = tilt(&d, 0.1).unwrap();
    assert_eq!(
        *t.as_closed_form().unwrap(),
        DelayFamily::Gamma { shape: 2.0, rate: 0.6 }
    );
    assert_relative_eq!(t.mean(), 2.0 / 0.6, max_relative = 1e-12);
    assert_abs_diff_eq!(t.log_normalizer(), GAMMA_TILT_LOGZ, epsilon = 1e-12);

    // quadrature oracle: ∫x·f·e^{−rx} / ∫f·e^{−rx} on [0, 400]
    let f = |x: f64| d.pdf(x) * (-0.1 * x).exp();
    let z = simpson(&f, 0.0, 400.0, 40_000);
    let m = simpson(|x| x * f(x), 0.0, 400.0, 40_000) / z;
    assert_abs_diff_eq!(t.mean(), m, epsilon = 1e-6);
    assert_abs_diff_eq!(t.log_normalizer(), z.ln(), epsilon = 1e-6);
}

#[test]
fn tilt_normal_closed_form() {
    let d = DelayFamily::normal(5.0, 2.0).unwrap();
    let t = tilt(&d, 0.1).unwrap();
    assert_eq!(
        *t.as_closed_form().unwrap(),
        DelayFamily::Normal { mean: 4.6, sd: 2.0 }
    );
    assert_abs_diff_eq!(t.log_normalizer(), -0.48, epsilon = 1e-12);

    let f = |x: f64| d.pdf(x) * (-0.1 * x).exp();
    let z = simpson(&f, -40.0, 60.0, 40_000);
    let m = simpson(|x| x * f(x), -40.0, 60.0, 40_000) / z;
    assert_abs_diff_eq!(t.mean(), m, epsilon = 1e-6);
    assert_abs_diff_eq!(t.log_normalizer(), z.ln(), epsilon = 1e-6);
}

#[test]
fn tilt_zero_rate_is_identity() {
    for d in [
        DelayFamily::gamma(2.0, 0.5).unwrap(),
        DelayFamily::lognormal(1.0, 0.5).unwrap(),
        DelayFamily::weibull(1.5, 4.0).unwrap(),
        DelayFamily::normal(3.0, 1.5).unwrap(),
    ] {
        let t = tilt(&d, 0.0).unwrap();
        assert_eq!(t.log_normalizer(), 0.0);
        for i in 0..50 {
            let x = -2.0 + 0.4 * i as f64;
            assert_eq!(t.pdf(x), d.pdf(x), "pointwise identity at {x}");
        }
    }
}

#[test]
fn tilt_numeric_families_normalize() {
    // numeric normalizer path: density must integrate to 1. The oracle
    // integrates on the log axis so the Weibull slope singularity at zero
    // does not limit the oracle's own accuracy.
    for (d, r) in [
        (DelayFamily::lognormal(1.0, 0.5).unwrap(), 0.15),
        (DelayFamily::weibull(1.5, 4.0).unwrap(), 0.2),
        (DelayFamily::weibull(2.0, 5.0).unwrap(), -0.05),
    ] {
        let t = tilt(&d, r).unwrap();
        assert!(t.as_closed_form().is_none());
        let total = simpson(
            |u: f64| {
                let x = u.exp();
                t.pdf(x) * x
            },
            (1e-12f64).ln(),
            500f64.ln(),
            100_000,
        );
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn tilt_lognormal_negative_rate_diverges() {
    let d = DelayFamily::lognormal(1.0, 0.5).unwrap();
    assert!(matches!(
        tilt(&d, -0.1),
        Err(DelayError::DivergentNormalizer { .. })
    ));
}

#[test]
fn tilt_gamma_rate_at_or_below_negative_beta_diverges() {
    let d = DelayFamily::gamma(2.0, 0.5).unwrap();
    assert!(tilt(&d, -0.5).is_err());
    assert!(tilt(&d, -0.6).is_err());
    assert!(tilt(&d, -0.49).is_ok());
}

#[test]
fn tilt_direction_matches_epidemic_phase() {
    // growth (r > 0) shortens the backward distribution, decay lengthens it
    let cases: Vec<(DelayFamily, f64)> = vec![
        (DelayFamily::gamma(2.0, 0.5).unwrap(), 0.1),
        (DelayFamily::gamma(2.0, 0.5).unwrap(), -0.2),
        (DelayFamily::lognormal(1.0, 0.5).unwrap(), 0.1),
        (DelayFamily::weibull(1.5, 4.0).unwrap(), 0.1),
        (DelayFamily::weibull(2.0, 5.0).unwrap(), -0.05),
        (DelayFamily::normal(5.0, 2.0).unwrap(), 0.1),
        (DelayFamily::normal(5.0, 2.0).unwrap(), -0.1),
    ];
    for (d, r) in cases {
        let t = tilt(&d, r).unwrap();
        if r > 0.0 {
            assert!(
                t.mean() < d.mean(),
                "{:?} r={r}: tilted {} !< {}",
                d.kind(),
                t.mean(),
                d.mean()
            );
        } else {
            assert!(
                t.mean() > d.mean(),
                "{:?} r={r}: tilted {} !> {}",
                d.kind(),
                t.mean(),
                d.mean()
            );
        }
    }
}

#[test]
fn tilted_cdf_and_quantile_agree_numeric() {
    let t = tilt(&DelayFamily::lognormal(1.0, 0.5).unwrap(), 0.2).unwrap();
    for &p in &[0.1, 0.5, 0.9] {
        let q = t.quantile(p).unwrap();
        assert_abs_diff_eq!(t.cdf(q), p, epsilon = 1e-7);
    }
}

#[test]
fn summary_round_trip_on_grid() {
    let means = [0.5, 1.0, 5.0, 20.0];
    let sds = [0.25, 1.0, 5.0];
    for kind in FamilyKind::ALL {
        let mut mean_grid: Vec<f64> = means.to_vec();
        if kind == FamilyKind::Normal {
            mean_grid.extend([-3.0, 0.0]);
        }
        for &m in &mean_grid {
            for &s in &sds {
                let d = params_from_summary(kind, m, s)
                    .unwrap_or_else(|e| panic!("{kind} m={m} s={s}: {e}"));
                let summary = summary_from_params(&d, &[]).unwrap();
                assert_relative_eq!(summary.mean, m, max_relative = 1e-9);
                assert_relative_eq!(summary.sd, s, max_relative = 1e-9);
            }
        }
    }
}

#[test]
fn serde_record_format_is_exact() {
    let d = DelayFamily::gamma(2.0, 0.5).unwrap();
    let json = serde_json::to_string(&d).unwrap();
    assert_eq!(json, r#"{"family":"gamma","params":{"rate":0.5,"shape":2.0}}"#);
    let back: DelayFamily = serde_json::from_str(&json).unwrap();
    assert_eq!(back, d);

    let ln: DelayFamily =
        serde_json::from_str(r#"{"family":"lognormal","params":{"meanlog":1.0,"sdlog":0.5}}"#)
            .unwrap();
    assert_eq!(ln, DelayFamily::lognormal(1.0, 0.5).unwrap());

    // wrong parameter names are rejected
    assert!(serde_json::from_str::<DelayFamily>(
        r#"{"family":"weibull","params":{"shape":2.0,"rate":1.0}}"#
    )
    .is_err());
    // invalid values are rejected at construction
    assert!(serde_json::from_str::<DelayFamily>(
        r#"{"family":"gamma","params":{"shape":-2.0,"rate":1.0}}"#
    )
    .is_err());
}

#[test]
fn construction_rejects_bad_parameters() {
    assert!(DelayFamily::gamma(0.0, 1.0).is_err());
    assert!(DelayFamily::gamma(1.0, f64::NAN).is_err());
    assert!(DelayFamily::lognormal(f64::INFINITY, 1.0).is_err());
    assert!(DelayFamily::weibull(1.0, -1.0).is_err());
    assert!(DelayFamily::normal(0.0, 0.0).is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn family_strategy() -> impl Strategy<Value = DelayFamily> {
        prop_oneof![
            (0.2f64..8.0, 0.05f64..4.0).prop_map(|(k, b)| DelayFamily::gamma(k, b).unwrap()),
            ((-1.0f64..2.5), 0.1f64..1.5)
                .prop_map(|(m, s)| DelayFamily::lognormal(m, s).unwrap()),
            (0.5f64..6.0, 0.5f64..15.0).prop_map(|(k, l)| DelayFamily::weibull(k, l).unwrap()),
            ((-10.0f64..10.0), 0.2f64..6.0).prop_map(|(m, s)| DelayFamily::normal(m, s).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_bounded(d in family_strategy(), a in -5.0f64..40.0, b in -5.0f64..40.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ca = d.cdf(lo);
            let cb = d.cdf(hi);
            prop_assert!((0.0..=1.0).contains(&ca));
            prop_assert!((0.0..=1.0).contains(&cb));
            prop_assert!(ca <= cb + 1e-12);
        }

        #[test]
        fn quantile_round_trip(d in family_strategy(), p in 0.01f64..0.99) {
            let x = d.quantile(p).unwrap();
            prop_assert!((d.cdf(x) - p).abs() < 1e-8);
        }

        #[test]
        fn conversion_round_trip(kind_idx in 0usize..4, m in 0.3f64..30.0, s in 0.1f64..8.0) {
            let kind = FamilyKind::ALL[kind_idx];
            let d = params_from_summary(kind, m, s).unwrap();
            let summary = summary_from_params(&d, &[]).unwrap();
            prop_assert!((summary.mean - m).abs() / m < 1e-8);
            prop_assert!((summary.sd - s).abs() / s < 1e-8);
        }
    }
}
