//! Experiment configuration: a JSON file whose fields all have the
//! standard defaults spelled out, so a minimal config only names the
//! data file, the subset and where results go.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use survband_core::ingest::CovariateSpec;
use survband_core::models::{default_zoo, ModelSpec};
use survband_core::rashomon::SelectionLoss;
use survband_core::CmapssSubset;

use crate::{CliError, Result};

fn default_censor_times() -> Vec<f64> {
    vec![200.0, 225.0, 250.0]
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_seed() -> u64 {
    42
}

fn default_loss() -> String {
    SelectionLoss::OneMinusCIndex.as_str().to_string()
}

fn default_grid_step() -> f64 {
    1.0
}

/// One experiment: which log to ingest, how to censor and split it,
/// which models to fit, and how to select and band them. Unknown fields
/// are rejected so typos cannot silently fall back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// 26-column run-to-failure log to ingest.
    pub data_path: PathBuf,
    /// Which benchmark subset the log represents (FD001..FD004).
    pub subset: CmapssSubset,
    /// Administrative censoring horizons; one report block per entry.
    #[serde(default = "default_censor_times")]
    pub censor_times: Vec<f64>,
    /// Near-optimal selection margin on the held-out loss.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Fraction of units assigned to the training side.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Seed for the unit split and any stochastic model fits.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// How each unit's early cycles collapse into covariates.
    #[serde(default)]
    pub covariate_spec: CovariateSpec,
    /// Models to fit; defaults to the eight standard families.
    #[serde(default = "default_zoo")]
    pub zoo: Vec<ModelSpec>,
    /// Selection loss: "one_minus_c_index" or "integrated_brier".
    #[serde(default = "default_loss")]
    pub loss: String,
    /// Spacing of the band evaluation grid, in cycles.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Directory for the report and per-censor-time artifacts.
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(data_path: PathBuf, subset: CmapssSubset, output_dir: PathBuf) -> Self {
        Self {
            data_path,
            subset,
            censor_times: default_censor_times(),
            epsilon: default_epsilon(),
            train_fraction: default_train_fraction(),
            seed: default_seed(),
            covariate_spec: CovariateSpec::default(),
            zoo: default_zoo(),
            loss: default_loss(),
            grid_step: default_grid_step(),
            output_dir,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.censor_times.is_empty() {
            return Err(CliError::Config("censor_times must not be empty".into()));
        }
        for &t in &self.censor_times {
            if !t.is_finite() || t < 1.0 {
                return Err(CliError::Config(format!(
                    "censor time {t} must be a finite value >= 1 (the first cycle)"
                )));
            }
        }
        if !self.censor_times.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(
                "censor_times must be strictly increasing and free of duplicates".into(),
            ));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(CliError::Config(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if !self.train_fraction.is_finite()
            || self.train_fraction <= 0.0
            || self.train_fraction >= 1.0
        {
            return Err(CliError::Config(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if !self.grid_step.is_finite() || self.grid_step <= 0.0 {
            return Err(CliError::Config(format!("grid_step must be positive, got {}", self.grid_step)));
        }
        if self.zoo.is_empty() {
            return Err(CliError::Config("zoo must contain at least one model".into()));
        }
        for (i, spec) in self.zoo.iter().enumerate() {
            if self.zoo[..i].iter().any(|other| other.model_id == spec.model_id) {
                return Err(CliError::Config(format!("duplicate model_id {:?} in zoo", spec.model_id)));
            }
        }
        if let CovariateSpec::WindowMean { window_length: 0 } = self.covariate_spec {
            return Err(CliError::Config("covariate window_length must be at least 1".into()));
        }
        SelectionLoss::parse(&self.loss)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}
