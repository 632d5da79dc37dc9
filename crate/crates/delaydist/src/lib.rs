//! Estimation and reporting of epidemiological delay distributions.
//!
//! Delay data from outbreak linelists (incubation periods, serial intervals,
//! onset-to-report delays, ...) carry three systematic distortions: both event
//! times are interval-censored by date-level reporting, delays whose end event
//! has not happened yet are missing entirely (right truncation), and cohorting
//! by the end event mixes in the epidemic trajectory (dynamical bias). This
//! crate provides:
//!
//! * parametric delay families (gamma, lognormal, Weibull, normal) with
//!   parameter/summary conversion and exponential tilting ([`distributions`]);
//! * a linelist data model with windowed events, cohorting, epidemic curves
//!   and growth-rate estimation ([`linelist`]);
//! * a synthetic outbreak simulator with known ground truth, used as the
//!   verification oracle and for posterior-predictive simulation
//!   ([`synthdata`]);
//! * censoring/truncation/tilt-adjusted likelihoods with maximum-likelihood
//!   and adaptive-Metropolis fits, model comparison, convergence diagnostics,
//!   Kaplan-Meier survival and post-hoc backward-to-forward correction
//!   ([`inference`]);
//! * a reporting-checklist builder with completeness scoring and
//!   posterior-predictive-check data ([`reporting`]).
//!
//! The `delaydist` binary wires these into `simulate`, `fit`, `compare`,
//! `report`, `check` and `sbc` subcommands.

pub mod distributions;
pub mod error;
pub mod inference;
pub mod linelist;
pub mod numeric;
pub mod reporting;
pub mod synthdata;

pub use error::{DelayError, Result};

/// Crate version recorded in fit and report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default seed used by the CLI when none is supplied.
pub const DEFAULT_SEED: u64 = 42;
