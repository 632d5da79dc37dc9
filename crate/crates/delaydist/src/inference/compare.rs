//! Information criteria and model ranking.

use super::{FitDocument, FitMethod};
use crate::distributions::FamilyKind;
use crate::error::{DelayError, Result};
use serde::{Deserialize, Serialize};

/// WAIC from a `[draw][case]` pointwise log-likelihood matrix:
/// −2·(lppd − p_waic) with p_waic the summed posterior variances.
pub fn waic_from_pointwise(matrix: &[Vec<f64>]) -> f64 {
    let n_draws = matrix.len();
    assert!(n_draws > 1, "WAIC needs at least two draws");
    let n_cases = matrix[0].len();
    let s = n_draws as f64;

    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for case in 0..n_cases {
        let column = matrix.iter().map(|row| row[case]);
        let max = column.clone().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = column.clone().map(|v| (v - max).exp()).sum();
        lppd += max + (sum_exp / s).ln();

        let mean: f64 = column.clone().sum::<f64>() / s;
        let var: f64 = column.map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0);
        p_waic += var;
    }
    -2.0 * (lppd - p_waic)
}

/// One ranked model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub family: FamilyKind,
    /// AIC or WAIC, depending on the table's criterion.
    pub criterion_value: f64,
    /// Difference to the best (first) row.
    pub delta: f64,
    pub loglik: f64,
}

/// Models ranked ascending by information criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// "aic" for MLE fits, "waic" for MCMC fits.
    pub criterion: String,
    pub rows: Vec<ComparisonRow>,
}

/// Ranks fits of different families to the same data under the same
/// adjustments: ascending criterion, ties broken by family name.
pub fn compare_models(fits: &[FitDocument]) -> Result<ComparisonTable> {
    if fits.is_empty() {
        return Err(DelayError::NotComparable("no fits supplied".into()));
    }
    let method = fits[0].method;
    let hash = &fits[0].provenance.data_hash;
    let adjustments = fits[0].adjustments;
    for fit in fits {
        if fit.method != method {
            return Err(DelayError::NotComparable(
                "fits mix MLE and MCMC methods".into(),
            ));
        }
        if &fit.provenance.data_hash != hash {
            return Err(DelayError::NotComparable(format!(
                "fits come from different datasets ({} vs {})",
                fit.provenance.data_hash, hash
            )));
        }
        if fit.adjustments != adjustments {
            return Err(DelayError::NotComparable(
                "fits apply different adjustment sets".into(),
            ));
        }
    }

    let criterion_of = |fit: &FitDocument| -> Result<f64> {
        match method {
            FitMethod::Mle => Ok(fit.aic),
            FitMethod::Mcmc => fit.waic.ok_or_else(|| {
                DelayError::NotComparable(format!(
                    "MCMC fit of {} lacks a WAIC value",
                    fit.family
                ))
            }),
        }
    };

    let mut rows: Vec<ComparisonRow> = fits
        .iter()
        .map(|fit| {
            Ok(ComparisonRow {
                family: fit.family,
                criterion_value: criterion_of(fit)?,
                delta: 0.0,
                loglik: fit.loglik,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        a.criterion_value
            .total_cmp(&b.criterion_value)
            .then_with(|| a.family.name().cmp(b.family.name()))
    });
    let best = rows[0].criterion_value;
    for row in rows.iter_mut() {
        row.delta = row.criterion_value - best;
    }
    Ok(ComparisonTable {
        criterion: match method {
            FitMethod::Mle => "aic".into(),
            FitMethod::Mcmc => "waic".into(),
        },
        rows,
    })
}
