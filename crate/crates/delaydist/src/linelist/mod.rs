//! Linelist data model and preprocessing.
//!
//! One case is a pair of event windows: the primary event (exposure, onset in
//! the infector) and the secondary event (onset, onset in the infectee), each
//! known only up to a half-open interval, or a union of disjoint intervals
//! when a case reports several possible exposures. A linelist bundles cases
//! with the observation horizon T and dataset-level flags.
//!
//! All times are numeric days relative to an arbitrary epoch; calendar
//! handling stays in the ingestion layer.

mod csvio;
mod curve;

pub use csvio::{ingest_csv_path, ingest_csv_reader, write_linelist, LinelistMeta};
pub(crate) use csvio::format_days;
pub use curve::{
    epidemic_curve, estimate_growth_rate, growth_from_series, CurveEvent, EpidemicCurve,
    GrowthEstimate,
};

use crate::error::{DelayError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Half-open interval [lo, hi) in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// An event time known to lie in a union of disjoint half-open intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    segments: Vec<Segment>,
}

impl EventWindow {
    /// Validates ordering, disjointness and positive total measure.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(DelayError::InvalidLinelist(
                "event window needs at least one segment".into(),
            ));
        }
        for seg in &segments {
            if !(seg.lo.is_finite() && seg.hi.is_finite() && seg.lo < seg.hi) {
                return Err(DelayError::InvalidLinelist(format!(
                    "window segment [{}, {}) has upper <= lower or non-finite bound",
                    seg.lo, seg.hi
                )));
            }
        }
        for pair in segments.windows(2) {
            if pair[1].lo < pair[0].hi {
                return Err(DelayError::InvalidLinelist(format!(
                    "window segments [{}, {}) and [{}, {}) overlap or are out of order",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(EventWindow { segments })
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        EventWindow::new(vec![Segment { lo, hi }])
    }

    /// A date reported as a single day d, still censored: [d, d+1).
    pub fn point_date(day: f64) -> Result<Self> {
        EventWindow::single(day, day + 1.0)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Smallest possible event time.
    pub fn lower(&self) -> f64 {
        self.segments[0].lo
    }

    /// Supremum of possible event times.
    pub fn upper(&self) -> f64 {
        self.segments[self.segments.len() - 1].hi
    }

    pub fn measure(&self) -> f64 {
        self.segments.iter().map(Segment::measure).sum()
    }

    /// Measure-weighted centroid (the midpoint for a single segment).
    pub fn centroid(&self) -> f64 {
        let total = self.measure();
        self.segments
            .iter()
            .map(|s| s.midpoint() * s.measure())
            .sum::<f64>()
            / total
    }

    pub fn translate(&self, by: f64) -> EventWindow {
        EventWindow {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    lo: s.lo + by,
                    hi: s.hi + by,
                })
                .collect(),
        }
    }

    /// Expands every segment by `amount` days on each side, merging segments
    /// that come to overlap. Coarsens windows for privacy at export.
    pub fn widen(&self, amount: f64) -> EventWindow {
        assert!(amount >= 0.0, "widening amount must be nonnegative");
        let mut merged: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            let w = Segment {
                lo: s.lo - amount,
                hi: s.hi + amount,
            };
            match merged.last_mut() {
                Some(last) if w.lo <= last.hi => last.hi = last.hi.max(w.hi),
                _ => merged.push(w),
            }
        }
        EventWindow { segments: merged }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.segments.iter().any(|s| t >= s.lo && t < s.hi)
    }
}

/// One observed delay: a primary and a secondary event window plus strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub primary: EventWindow,
    pub secondary: EventWindow,
    #[serde(default)]
    pub strata: BTreeMap<String, String>,
    /// Whether the direction of transmission is known for this pair
    /// (serial-interval data only; defaults to true elsewhere).
    #[serde(default = "default_true")]
    pub pair_order_known: bool,
}

fn default_true() -> bool {
    true
}

impl CaseRecord {
    /// Largest delay compatible with the windows.
    pub fn max_possible_delay(&self) -> f64 {
        self.secondary.upper() - self.primary.lower()
    }

    /// Smallest delay compatible with the windows.
    pub fn min_possible_delay(&self) -> f64 {
        self.secondary.lower() - self.primary.upper()
    }

    /// Midpoint delay used by the naive estimator.
    pub fn naive_delay(&self) -> f64 {
        self.secondary.centroid() - self.primary.centroid()
    }
}

/// Direction used when cohorting cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CohortDirection {
    /// Group by primary event: the forward distribution, the estimand.
    Forward,
    /// Group by secondary event: the backward distribution, subject to
    /// dynamical bias.
    Backward,
}

/// Policy for case pairs whose windows imply a negative delay
/// (serial-interval data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativePolicy {
    /// Keep the pairs; requires a family that allows negative values.
    Keep,
    /// Remove the pairs.
    Drop,
    /// Swap primary and secondary events for the pairs.
    Reverse,
}

impl std::str::FromStr for NegativePolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "keep" => Ok(NegativePolicy::Keep),
            "drop" => Ok(NegativePolicy::Drop),
            "reverse" => Ok(NegativePolicy::Reverse),
            other => Err(format!("unknown negative policy '{other}'")),
        }
    }
}

/// A collection of cases with the observation horizon and dataset flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Linelist {
    cases: Vec<CaseRecord>,
    observation_time: Option<f64>,
    allow_negative: bool,
    delay_name: String,
}

impl Linelist {
    pub fn new(
        cases: Vec<CaseRecord>,
        observation_time: Option<f64>,
        allow_negative: bool,
        delay_name: impl Into<String>,
    ) -> Result<Self> {
        if let Some(t) = observation_time {
            if !(t.is_finite() && t > 0.0) {
                return Err(DelayError::InvalidLinelist(format!(
                    "observation time {t} must be finite and > 0"
                )));
            }
            for case in &cases {
                if case.secondary.upper() > t {
                    return Err(DelayError::InvalidLinelist(format!(
                        "case '{}': secondary window upper bound {} exceeds observation time {}",
                        case.id,
                        case.secondary.upper(),
                        t
                    )));
                }
            }
        }
        if !allow_negative {
            for case in &cases {
                if case.max_possible_delay() < 0.0 {
                    return Err(DelayError::InvalidLinelist(format!(
                        "case '{}': windows force a negative delay but the dataset does not allow negatives",
                        case.id
                    )));
                }
            }
        }
        Ok(Linelist {
            cases,
            observation_time,
            allow_negative,
            delay_name: delay_name.into(),
        })
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Final observation time T; None for complete retrospective data.
    pub fn observation_time(&self) -> Option<f64> {
        self.observation_time
    }

    pub fn allow_negative(&self) -> bool {
        self.allow_negative
    }

    pub fn delay_name(&self) -> &str {
        &self.delay_name
    }

    /// Union of strata keys across cases (column order for export).
    pub fn strata_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = self
            .cases
            .iter()
            .flat_map(|c| c.strata.keys().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// Midpoint delays, the naive estimator's input.
    pub fn naive_delays(&self) -> Result<Vec<f64>> {
        if self.cases.is_empty() {
            return Err(DelayError::EmptyLinelist);
        }
        Ok(self.cases.iter().map(CaseRecord::naive_delay).collect())
    }

    /// Groups cases into bins of `bin_width` days by the lower bound of the
    /// primary (Forward) or secondary (Backward) window.
    pub fn cohort(
        &self,
        direction: CohortDirection,
        bin_width: f64,
    ) -> Result<Vec<(i64, Vec<CaseRecord>)>> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(DelayError::InvalidLinelist(format!(
                "cohort bin width {bin_width} must be finite and > 0"
            )));
        }
        let mut bins: BTreeMap<i64, Vec<CaseRecord>> = BTreeMap::new();
        for case in &self.cases {
            let anchor = match direction {
                CohortDirection::Forward => case.primary.lower(),
                CohortDirection::Backward => case.secondary.lower(),
            };
            let bin = (anchor / bin_width).floor() as i64;
            bins.entry(bin).or_default().push(case.clone());
        }
        Ok(bins.into_iter().collect())
    }

    /// Applies a negative-serial-interval policy.
    ///
    /// A pair is classified negative-capable when the secondary centroid
    /// falls before the primary centroid; window overlap makes the sign
    /// ambiguous, and midpoints resolve the classification deterministically.
    pub fn apply_negative_policy(&self, policy: NegativePolicy) -> Result<Linelist> {
        let is_negative = |c: &CaseRecord| c.secondary.centroid() < c.primary.centroid();
        let cases: Vec<CaseRecord> = match policy {
            NegativePolicy::Keep => self.cases.clone(),
            NegativePolicy::Drop => self
                .cases
                .iter()
                .filter(|c| !is_negative(c))
                .cloned()
                .collect(),
            NegativePolicy::Reverse => self
                .cases
                .iter()
                .map(|c| {
                    if is_negative(c) {
                        CaseRecord {
                            id: c.id.clone(),
                            primary: c.secondary.clone(),
                            secondary: c.primary.clone(),
                            strata: c.strata.clone(),
                            pair_order_known: c.pair_order_known,
                        }
                    } else {
                        c.clone()
                    }
                })
                .collect(),
        };
        Linelist::new(
            cases,
            self.observation_time,
            self.allow_negative,
            self.delay_name.clone(),
        )
    }

    /// Stable 64-bit FNV-1a hash of the canonical export plus metadata, used
    /// to tie fits and reports to the exact dataset they came from.
    pub fn data_hash(&self) -> String {
        let mut buf: Vec<u8> = Vec::new();
        write_linelist(self, &mut buf, 0.0).expect("in-memory export cannot fail");
        let mut hash: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        };
        eat(&buf);
        match self.observation_time {
            Some(t) => eat(&t.to_bits().to_le_bytes()),
            None => eat(b"none"),
        }
        eat(&[self.allow_negative as u8]);
        eat(self.delay_name.as_bytes());
        format!("{hash:016x}")
    }
}
