//! Survival-band toolkit for run-to-failure maintenance data.
//!
//! The pipeline this crate supports, end to end:
//!
//! 1. [`ingest`]: parse 26-column turbofan logs, drop constant columns,
//!    collapse trajectories into right-censored time-to-event rows under
//!    an administrative censoring horizon, split by unit.
//! 2. [`models`]: fit a zoo of survival estimators, from product-limit
//!    curves through penalized proportional hazards to tree ensembles.
//! 3. [`eval`]: score the zoo on held-out units (concordance,
//!    inverse-censoring-weighted Brier).
//! 4. [`rashomon`]: keep every model within epsilon of the best loss and
//!    trace the band its members span over survival curves: a direct
//!    picture of model-choice uncertainty over time.
//!
//! [`simulate`] generates deterministic demonstration data in the same
//! log format, plus synthetic samples with known ground truth for tests.

pub mod curve;
pub mod dataset;
mod error;
pub mod eval;
pub mod ingest;
pub mod models;
pub mod rashomon;
pub mod simulate;

pub use curve::{mean_curve, SurvivalCurve};
pub use dataset::{Standardizer, TimeToEventDataset, TimeToEventRow};
pub use error::{Error, Result};
pub use simulate::CmapssSubset;
