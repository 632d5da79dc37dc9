//! Posterior-predictive-check data.
//!
//! Comparing a fitted latent distribution directly against censored,
//! truncated observations misleads the eye; the predictive histogram is
//! instead simulated through the same observation process (window widths,
//! growth, cutoff) and binned on a shared integer-day grid.

use crate::distributions::DelayFamily;
use crate::error::{DelayError, Result};
use crate::linelist::Linelist;
use crate::synthdata::{simulate_observed_from_fit, ObservationProcess};
use serde::{Deserialize, Serialize};

/// Observed vs predicted delay frequencies on a shared bin grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcData {
    /// Integer-day bin edges, length = bins + 1; bin i is [edges[i], edges[i+1]).
    pub bin_edges: Vec<f64>,
    pub observed_freq: Vec<f64>,
    pub predicted_freq: Vec<f64>,
    pub n_observed: usize,
    pub n_predicted: usize,
}

impl PpcData {
    /// Largest absolute per-bin frequency gap.
    pub fn max_frequency_gap(&self) -> f64 {
        self.observed_freq
            .iter()
            .zip(&self.predicted_freq)
            .map(|(o, p)| (o - p).abs())
            .fold(0.0, f64::max)
    }

    /// CSV: `bin_lo,bin_hi,observed_freq,predicted_freq`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["bin_lo", "bin_hi", "observed_freq", "predicted_freq"])?;
        for i in 0..self.observed_freq.len() {
            out.write_record([
                format!("{}", self.bin_edges[i]),
                format!("{}", self.bin_edges[i + 1]),
                format!("{:.9}", self.observed_freq[i]),
                format!("{:.9}", self.predicted_freq[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Observed and predicted naive-delay histograms on integer-day bins.
///
/// `process` should mirror the linelist's censoring widths, cutoff and
/// growth estimate; the predicted sample is drawn from `fit_dist` pushed
/// through that process with the given seed (deterministic).
pub fn ppc_data(
    fit_dist: &DelayFamily,
    linelist: &Linelist,
    process: &ObservationProcess,
    seed: u64,
) -> Result<PpcData> {
    if linelist.is_empty() {
        return Err(DelayError::EmptyLinelist);
    }
    let observed = linelist.naive_delays()?;
    let predicted = simulate_observed_from_fit(fit_dist, process, seed)?;
    if predicted.is_empty() {
        return Err(DelayError::InvalidLinelist(
            "predictive simulation produced no included cases".into(),
        ));
    }

    let min = observed
        .iter()
        .chain(&predicted)
        .fold(f64::INFINITY, |a, &b| a.min(b))
        .floor();
    let max = observed
        .iter()
        .chain(&predicted)
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        .floor()
        + 1.0;
    let bins = (max - min) as usize;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| min + i as f64).collect();

    let histogram = |sample: &[f64]| -> Vec<f64> {
        let mut counts = vec![0usize; bins];
        for &x in sample {
            let idx = ((x - min).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / sample.len() as f64)
            .collect()
    };

    Ok(PpcData {
        bin_edges,
        observed_freq: histogram(&observed),
        predicted_freq: histogram(&predicted),
        n_observed: observed.len(),
        n_predicted: predicted.len(),
    })
}
