//! Experiment runner around `survband-core`: configuration loading, the
//! censor-time sweep pipeline, report and artifact serialization, SVG
//! band plots, and cross-report comparison tables.

pub mod compare;
pub mod config;
pub mod pipeline;
pub mod plot;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration file missing, malformed or violating an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input artifacts (data logs, envelope CSVs, reports) unreadable or
    /// inconsistent.
    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] survband_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
