//! Shared error type for dataset construction, model fitting and scoring.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A survival curve violated its invariants (grid not strictly
    /// increasing, probabilities outside [0, 1] or increasing over time).
    #[error("invalid survival curve: {0}")]
    InvalidCurve(String),

    /// A dataset violated its invariants (non-positive times, missing
    /// events, ragged covariate rows).
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// A caller-supplied argument was out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A raw data file could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset has no observed events; estimators would be degenerate")]
    NoEvents,

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An iterative fit ran out of iterations before meeting its tolerance.
    #[error("fit did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    /// Monotone likelihood: coefficients diverge without a penalty.
    #[error("coefficients diverged (|beta| reached {max_coefficient:.1}); the data likely separate, try a penalized fit")]
    Separation { max_coefficient: f64 },

    #[error("no comparable pairs: concordance is undefined for this sample")]
    NoComparablePairs,

    /// The inverse-censoring weight at this horizon is 1/0.
    #[error("censoring survival is zero at or before t = {time}; the score is inestimable there")]
    InestimableHorizon { time: f64 },

    #[error("unknown loss name {0:?} (expected \"one_minus_c_index\" or \"integrated_brier\")")]
    UnknownLoss(String),

    /// A selected-set member has no fitted model to back it.
    #[error("no fitted model found for selected member {0:?}")]
    MissingMemberModel(String),

    #[error("probe time {time} lies outside the band grid [{start}, {end}]")]
    ProbeOutsideGrid { time: f64, start: f64, end: f64 },

    /// Model evaluation failed for one member of the zoo.
    #[error("evaluation of model {model_id:?} failed: {source}")]
    Evaluation {
        model_id: String,
        #[source]
        source: Box<Error>,
    },

    /// A serialized model payload was malformed or from an unknown version.
    #[error("model deserialization failed: {0}")]
    ModelFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
