//! Convergence diagnostics for multi-chain samplers.
//!
//! Split R-hat compares within- and between-half-chain variance; the
//! effective sample size is computed on rank-normalized draws with Geyer's
//! initial positive/monotone sequence over paired autocorrelations.

use crate::numeric::special::norm_quantile;

fn split_in_half(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for chain in chains {
        let n = chain.len() / 2;
        // odd lengths drop the middle element
        halves.push(&chain[..n]);
        halves.push(&chain[chain.len() - n..]);
    }
    halves
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Within-sequence variance W, pooled variance estimate var⁺ and half-chain
/// length, on the given sequences.
fn variance_components(seqs: &[&[f64]]) -> Option<(f64, f64, usize)> {
    let n = seqs.first()?.len();
    if n < 2 || seqs.len() < 2 {
        return None;
    }
    let w = seqs.iter().map(|s| sample_var(s)).sum::<f64>() / seqs.len() as f64;
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let var_means = sample_var(&means);
    let var_plus = (n as f64 - 1.0) / n as f64 * w + var_means;
    Some((w, var_plus, n))
}

/// Split R-hat across chains for one parameter.
///
/// Chains that never move give W = 0: the statistic is 1 when the chains also
/// agree, infinite when they disagree (the deliberately-stuck-chains case).
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves = split_in_half(chains);
    let Some((w, var_plus, _)) = variance_components(&halves) else {
        return f64::NAN;
    };
    if w <= 0.0 {
        return if var_plus <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / w).sqrt()
}

/// Replaces draws by normal quantiles of their pooled fractional ranks
/// (average ranks on ties).
fn rank_normalize(seqs: &[&[f64]]) -> Vec<Vec<f64>> {
    let total: usize = seqs.iter().map(|s| s.len()).sum();
    let mut indexed: Vec<(f64, usize)> = Vec::with_capacity(total);
    let mut offsets = Vec::with_capacity(seqs.len());
    let mut offset = 0usize;
    for s in seqs {
        offsets.push(offset);
        for (i, &v) in s.iter().enumerate() {
            indexed.push((v, offset + i));
        }
        offset += s.len();
    }
    indexed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && indexed[j + 1].0 == indexed[i].0 {
            j += 1;
        }
        // average rank for the tie group, 1-based
        let avg = (i + j + 2) as f64 / 2.0;
        for item in &indexed[i..=j] {
            ranks[item.1] = avg;
        }
        i = j + 1;
    }

    let n_total = total as f64;
    seqs.iter()
        .zip(&offsets)
        .map(|(s, &off)| {
            (0..s.len())
                .map(|i| norm_quantile((ranks[off + i] - 0.375) / (n_total + 0.25)))
                .collect()
        })
        .collect()
}

/// Rank-normalized bulk effective sample size across chains for one
/// parameter. Returns 0 for degenerate inputs.
pub fn rank_normalized_ess(chains: &[Vec<f64>]) -> f64 {
    let halves = split_in_half(chains);
    if halves.iter().any(|s| s.len() < 4) {
        return 0.0;
    }
    // constant chains carry no information
    let pooled_first = halves[0].first().copied().unwrap_or(0.0);
    if halves
        .iter()
        .all(|s| s.iter().all(|&v| v == pooled_first))
    {
        return 0.0;
    }

    let z = rank_normalize(&halves);
    let z_refs: Vec<&[f64]> = z.iter().map(|v| v.as_slice()).collect();
    let Some((w, var_plus, n)) = variance_components(&z_refs) else {
        return 0.0;
    };
    if var_plus <= 0.0 || w <= 0.0 {
        return 0.0;
    }

    // per-sequence autocovariances (biased, 1/n normalization)
    let m = z.len();
    let means: Vec<f64> = z.iter().map(|s| mean(s)).collect();
    let autocov = |t: usize| -> f64 {
        let mut acc = 0.0;
        for (seq, mu) in z.iter().zip(&means) {
            let mut c = 0.0;
            for i in 0..(n - t) {
                c += (seq[i] - mu) * (seq[i + t] - mu);
            }
            acc += c / n as f64;
        }
        acc / m as f64
    };

    let rho = |t: usize| 1.0 - (w - autocov(t)) / var_plus;

    // Geyer initial positive + monotone sequence on paired sums
    let mut tau = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0usize;
    loop {
        let t0 = 2 * k;
        let t1 = 2 * k + 1;
        if t1 >= n - 1 {
            break;
        }
        let pair = rho(t0) + rho(t1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += pair;
        prev_pair = pair;
        k += 1;
    }
    let tau = (2.0 * tau - 1.0).max(1.0 / (n as f64).log10().max(1.0));
    let total = (m * n) as f64;
    total / tau
}
