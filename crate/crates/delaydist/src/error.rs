//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DelayError>;

#[derive(Debug, Error)]
pub enum DelayError {
    /// A distribution parameter violates its positivity/finiteness constraint.
    #[error("invalid parameter {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Summary-to-parameter conversion got an unrepresentable (mean, sd) pair.
    #[error("invalid summary for {family}: mean={mean}, sd={sd} ({reason})")]
    InvalidSummary {
        family: &'static str,
        mean: f64,
        sd: f64,
        reason: &'static str,
    },

    /// Root finding failed to bracket or converge.
    #[error("root finding did not converge: {0}")]
    RootFind(String),

    /// The exponential-tilt normalizer does not converge.
    #[error("divergent tilt normalizer for {family} at rate {rate}")]
    DivergentNormalizer { family: &'static str, rate: f64 },

    /// Malformed linelist input, reported with its CSV row (1-based, header = row 1).
    #[error("linelist row {row}: {message}")]
    LinelistRow { row: usize, message: String },

    /// Structural linelist problem not tied to one row.
    #[error("invalid linelist: {0}")]
    InvalidLinelist(String),

    /// Operation requires a nonempty linelist.
    #[error("empty linelist")]
    EmptyLinelist,

    /// Growth-rate estimation window is unusable.
    #[error("growth-rate window invalid: {0}")]
    GrowthWindow(String),

    /// Mutually exclusive adjustments were combined.
    #[error("invalid adjustment set: {0}")]
    InvalidAdjustments(String),

    /// Fit preconditions violated (sample size, support sign, option ranges).
    #[error("fit precondition failed: {0}")]
    FitPrecondition(String),

    /// Optimizer failed after all restarts.
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    /// Model comparison across incompatible fits.
    #[error("fits are not comparable: {0}")]
    NotComparable(String),

    /// Report built against a linelist other than the one used for the fit.
    #[error("data hash mismatch: fit has {fit_hash}, linelist has {data_hash}")]
    HashMismatch { fit_hash: String, data_hash: String },

    /// Decision-tree context that admits no valid adjustment set.
    #[error("adjustment decision impossible: {0}")]
    Undecidable(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
