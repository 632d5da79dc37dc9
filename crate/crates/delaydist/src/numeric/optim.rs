//! Derivative-free minimization and finite-difference curvature.

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` with the Nelder-Mead simplex method.
///
/// The initial simplex adds `step` to each coordinate of `x0` in turn.
/// Converged when the simplex diameter falls below `tol` or the value spread
/// across vertices is negligible relative to the best value.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> OptimResult {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut scores: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut converged = false;
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let diameter = simplex
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread = (scores[worst] - scores[best]).abs();
        if diameter < tol || spread < 1e-14 * (1.0 + scores[best].abs()) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (idx, p) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for d in 0..dim {
                centroid[d] += p[d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + ALPHA * (centroid[d] - simplex[worst][d]))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < scores[second_worst] && f_reflect >= scores[best] {
            simplex[worst] = reflect;
            scores[worst] = f_reflect;
            continue;
        }

        if f_reflect < scores[best] {
            let expand: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + GAMMA * (reflect[d] - centroid[d]))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                scores[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                scores[worst] = f_reflect;
            }
            continue;
        }

        let contract: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + RHO * (simplex[worst][d] - centroid[d]))
            .collect();
        let f_contract = eval(&contract, &mut evals);
        if f_contract < scores[worst] {
            simplex[worst] = contract;
            scores[worst] = f_contract;
            continue;
        }

        for idx in 0..=dim {
            if idx == best {
                continue;
            }
            for d in 0..dim {
                simplex[idx][d] = simplex[best][d] + SIGMA * (simplex[idx][d] - simplex[best][d]);
            }
            scores[idx] = eval(&simplex[idx], &mut evals);
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
        .unwrap();
    OptimResult {
        x: simplex[best].clone(),
        fx: scores[best],
        evals,
        converged,
    }
}

/// Central-difference gradient with per-coordinate step `h_scale * (1 + |x_i|)`.
pub fn finite_diff_gradient<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    h_scale: f64,
) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = h_scale * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central-difference Hessian with per-coordinate step `h_scale * (1 + |x_i|)`.
pub fn finite_diff_hessian<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    h_scale: f64,
) -> Vec<Vec<f64>> {
    let d = x.len();
    let h: Vec<f64> = x.iter().map(|xi| h_scale * (1.0 + xi.abs())).collect();
    let f0 = f(x);
    let mut hess = vec![vec![0.0; d]; d];
    let mut xp = x.to_vec();

    for i in 0..d {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            let fmm = f(&xp);
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

/// Cholesky factor (lower triangular) of a symmetric positive-definite
/// matrix, or None when the matrix is not positive definite.
pub fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let l = cholesky(a)?;
    // Invert L by forward substitution, then A^{-1} = L^{-T} L^{-1}.
    let mut linv = vec![vec![0.0; n]; n];
    for i in 0..n {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut sum = 0.0;
            for k in j..i {
                sum -= l[i][k] * linv[k][j];
            }
            linv[i][j] = sum / l[i][i];
        }
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in i..n {
                sum += linv[k][i] * linv[k][j];
            }
            inv[i][j] = sum;
            inv[j][i] = sum;
        }
    }
    Some(inv)
}

/// Solves A x = b for symmetric positive-definite A.
pub fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let l = cholesky(a)?;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}
