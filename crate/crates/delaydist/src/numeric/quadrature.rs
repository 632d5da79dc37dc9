//! Gauss-Legendre rules and semi-infinite integration with divergence
//! detection.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// A fixed Gauss-Legendre rule on [-1, 1], mapped to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the n-point rule (Newton iteration on Legendre roots).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    /// Returns the shared rule for `n` nodes, computing it on first use.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(rule) = cache.read().unwrap().get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(GaussLegendre::new(n));
        cache
            .write()
            .unwrap()
            .entry(n)
            .or_insert_with(|| Arc::clone(&rule))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        half * sum
    }

    /// Node positions and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Outcome of a semi-infinite integral attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailIntegral {
    Converged(f64),
    Divergent,
}

const PANEL_RULE: usize = 61;
const MAX_PANELS: usize = 200;
// one e-fold per panel on the log axis
const LOG_PANEL_WIDTH: f64 = 1.0;

/// Integrates `f` over (0, ∞) through the substitution x = e^t.
///
/// On the log axis every density here (and its exponential reweightings) is
/// analytic with exponentially decaying tails, so fixed Gauss-Legendre panels
/// converge fast even when f has a power singularity in slope at x = 0.
/// Panels expand outward from ln(center); each direction stops once two
/// consecutive panels contribute less than `rel_tol` of the running total.
/// Panel contributions that keep growing, or a direction that never settles
/// within the panel budget, are reported as divergence.
pub fn integrate_positive_axis<F: Fn(f64) -> f64>(f: F, center: f64, rel_tol: f64) -> TailIntegral {
    let rule = GaussLegendre::cached(PANEL_RULE);
    let t0 = center.max(1e-10).ln();
    let g = |t: f64| {
        let x = t.exp();
        f(x) * x
    };

    let mut total = 0.0;
    for direction in [1.0, -1.0] {
        let mut small_streak = 0;
        let mut grow_streak = 0;
        let mut prev_panel = f64::INFINITY;
        let mut settled = false;
        for j in 0..MAX_PANELS {
            let (a, b) = if direction > 0.0 {
                (t0 + j as f64 * LOG_PANEL_WIDTH, t0 + (j + 1) as f64 * LOG_PANEL_WIDTH)
            } else {
                (t0 - (j + 1) as f64 * LOG_PANEL_WIDTH, t0 - j as f64 * LOG_PANEL_WIDTH)
            };
            let panel = rule.integrate(a, b, g);
            if !panel.is_finite() {
                return TailIntegral::Divergent;
            }
            total += panel;

            let floor = rel_tol * total.abs().max(1e-300);
            if panel.abs() > prev_panel.abs() && panel.abs() > floor {
                grow_streak += 1;
                if grow_streak >= 5 {
                    return TailIntegral::Divergent;
                }
            } else {
                grow_streak = 0;
            }
            if panel.abs() <= floor {
                small_streak += 1;
                if small_streak >= 2 {
                    settled = true;
                    break;
                }
            } else {
                small_streak = 0;
            }
            prev_panel = panel;
        }
        if !settled {
            return TailIntegral::Divergent;
        }
    }
    TailIntegral::Converged(total)
}

/// Integrates `f` over (0, upper] through the substitution x = e^t,
/// descending from ln(upper) until the remaining panels are negligible.
pub fn integrate_positive_prefix<F: Fn(f64) -> f64>(f: F, upper: f64, rel_tol: f64) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let rule = GaussLegendre::cached(PANEL_RULE);
    let t_hi = upper.ln();
    let g = |t: f64| {
        let x = t.exp();
        f(x) * x
    };
    let mut total = 0.0;
    let mut small_streak = 0;
    for j in 0..MAX_PANELS {
        let b = t_hi - j as f64 * LOG_PANEL_WIDTH;
        let a = b - LOG_PANEL_WIDTH;
        let panel = rule.integrate(a, b, g);
        total += panel;
        if panel.abs() <= rel_tol * total.abs().max(1e-300) {
            small_streak += 1;
            if small_streak >= 2 {
                break;
            }
        } else {
            small_streak = 0;
        }
    }
    total
}

/// Composite integral of a smooth function over a finite interval, splitting
/// into panels no wider than `max_panel`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_panel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = GaussLegendre::cached(PANEL_RULE);
    let n_panels = ((b - a) / max_panel.max(1e-12)).ceil().max(1.0) as usize;
    let width = (b - a) / n_panels as f64;
    let mut total = 0.0;
    for i in 0..n_panels {
        let lo = a + i as f64 * width;
        total += rule.integrate(lo, lo + width, &f);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_3_nodes_and_weights() {
        let rule = GaussLegendre::new(3);
        let xs: Vec<f64> = rule.nodes.clone();
        assert_abs_diff_eq!(xs[0], 0.7745966692414834, epsilon = 1e-12);
        assert_abs_diff_eq!(xs[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(xs[2], -0.7745966692414834, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.weights[0], 5.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.weights[1], 8.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(5);
        // degree 9 is exact for a 5-point rule
        let got = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert_abs_diff_eq!(got, 2.0_f64.powi(10) / 10.0, epsilon = 1e-9);
    }

    #[test]
    fn positive_axis_exponential() {
        // ∫_0^∞ e^{-x} dx = 1
        match integrate_positive_axis(|x| (-x).exp(), 1.0, 1e-10) {
            TailIntegral::Converged(v) => assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9),
            TailIntegral::Divergent => panic!("should converge"),
        }
    }

    #[test]
    fn positive_axis_handles_sqrt_slope_singularity() {
        // ∫_0^∞ 1.5 √x e^{-x^{1.5}} dx = Γ(5/3)/... check against the exact
        // value ∫_0^∞ x^{1/2}·1.5·e^{-x^{3/2}} dx = Γ(...)=1 by substitution
        // u = x^{3/2}: integrand is a Weibull(1.5, 1) density.
        let f = |x: f64| 1.5 * x.sqrt() * (-x.powf(1.5)).exp();
        match integrate_positive_axis(f, 1.0, 1e-10) {
            TailIntegral::Converged(v) => assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9),
            TailIntegral::Divergent => panic!("should converge"),
        }
    }

    #[test]
    fn positive_axis_detects_divergence() {
        // ∫_0^∞ 1/(1+x) dx diverges slowly; the panel budget catches it.
        match integrate_positive_axis(|x| 1.0 / (1.0 + x), 1.0, 1e-10) {
            TailIntegral::Converged(_) => panic!("harmonic tail must not converge"),
            TailIntegral::Divergent => {}
        }
        // Exponentially growing integrand trips the growth detector.
        match integrate_positive_axis(|x| (0.5 * x).exp(), 1.0, 1e-10) {
            TailIntegral::Converged(_) => panic!("growing integrand must not converge"),
            TailIntegral::Divergent => {}
        }
    }

    #[test]
    fn positive_prefix_matches_cdf() {
        // ∫_0^2 e^{-x} dx = 1 - e^{-2}
        let got = integrate_positive_prefix(|x| (-x).exp(), 2.0, 1e-12);
        assert_abs_diff_eq!(got, 1.0 - (-2.0_f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn finite_composite_matches_closed_form() {
        let got = integrate_finite(|x| x.sin(), 0.0, std::f64::consts::PI, 0.25);
        assert_abs_diff_eq!(got, 2.0, epsilon = 1e-12);
    }
}
