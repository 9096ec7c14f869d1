//! The model zoo: one spec type, one fitted-model type, eight families.
//!
//! Hyperparameters travel as a name -> value map so specs serialize
//! cleanly into configs and reports; each family validates its own keys
//! and falls back to documented defaults. Fitted models serialize to a
//! versioned JSON payload carrying everything prediction needs.

pub mod boost;
pub mod cox;
pub mod forest;
pub mod nonparametric;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::{validate_grid, SurvivalCurve};
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};
pub use boost::fit_boosted_cox;
pub use cox::{cox_gradient, cox_log_likelihood, fit_cox, CoxFit};
pub use forest::{fit_random_survival_forest, ForestFit, ForestOptions};
pub use nonparametric::{
    censoring_km, event_table, kaplan_meier_curve, nelson_aalen_cumhaz, nelson_aalen_curve,
    EventCount,
};
pub use tree::{fit_survival_tree, SurvivalTree, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    KaplanMeier,
    NelsonAalen,
    CoxPh,
    CoxRidge,
    CoxLasso,
    SurvivalTree,
    RandomSurvivalForest,
    BoostedCox,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 8] = [
        ModelFamily::KaplanMeier,
        ModelFamily::NelsonAalen,
        ModelFamily::CoxPh,
        ModelFamily::CoxRidge,
        ModelFamily::CoxLasso,
        ModelFamily::SurvivalTree,
        ModelFamily::RandomSurvivalForest,
        ModelFamily::BoostedCox,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelFamily::KaplanMeier => "kaplan_meier",
            ModelFamily::NelsonAalen => "nelson_aalen",
            ModelFamily::CoxPh => "cox_ph",
            ModelFamily::CoxRidge => "cox_ridge",
            ModelFamily::CoxLasso => "cox_lasso",
            ModelFamily::SurvivalTree => "survival_tree",
            ModelFamily::RandomSurvivalForest => "random_survival_forest",
            ModelFamily::BoostedCox => "boosted_cox",
        }
    }

    /// Hyperparameter names this family understands.
    fn allowed_keys(&self) -> &'static [&'static str] {
        match self {
            ModelFamily::KaplanMeier | ModelFamily::NelsonAalen => &[],
            ModelFamily::CoxPh => &[],
            ModelFamily::CoxRidge | ModelFamily::CoxLasso => &["lambda"],
            ModelFamily::SurvivalTree => &["min_node_size", "max_depth"],
            ModelFamily::RandomSurvivalForest => {
                &["n_trees", "mtry", "min_node_size", "bootstrap", "seed"]
            }
            ModelFamily::BoostedCox => &["n_rounds", "learning_rate", "seed"],
        }
    }

    /// Whether fitting consumes random numbers (and therefore wants a
    /// seed injected when none is given).
    pub fn is_stochastic(&self) -> bool {
        matches!(self, ModelFamily::RandomSurvivalForest | ModelFamily::BoostedCox)
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model family {s:?}")))
    }
}

/// A model to fit: an identifier, a family and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub family: ModelFamily,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(model_id: impl Into<String>, family: ModelFamily) -> Self {
        Self { model_id: model_id.into(), family, hyperparameters: BTreeMap::new() }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    fn float_param(&self, name: &str, default: f64) -> f64 {
        self.hyperparameters.get(name).copied().unwrap_or(default)
    }

    fn usize_param(&self, name: &str, default: usize) -> Result<usize> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(&v) => {
                if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "hyperparameter {name} of model {:?} must be a non-negative integer, got {v}",
                        self.model_id
                    )))
                }
            }
        }
    }

    fn bool_param(&self, name: &str, default: bool) -> Result<bool> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(&v) if v == 0.0 => Ok(false),
            Some(&v) if v == 1.0 => Ok(true),
            Some(&v) => Err(Error::InvalidArgument(format!(
                "hyperparameter {name} of model {:?} must be 0 or 1, got {v}",
                self.model_id
            ))),
        }
    }

    fn validate_keys(&self) -> Result<()> {
        let allowed = self.family.allowed_keys();
        for key in self.hyperparameters.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "model {:?} ({}): unknown hyperparameter {key:?}; allowed: {allowed:?}",
                    self.model_id, self.family
                )));
            }
        }
        Ok(())
    }
}

/// The eight standard zoo members with their default settings spelled
/// out, so reports show exactly what was fitted.
pub fn default_zoo() -> Vec<ModelSpec> {
    vec![
        ModelSpec::new("kaplan_meier", ModelFamily::KaplanMeier),
        ModelSpec::new("nelson_aalen", ModelFamily::NelsonAalen),
        ModelSpec::new("cox_ph", ModelFamily::CoxPh),
        ModelSpec::new("cox_ridge", ModelFamily::CoxRidge).with_param("lambda", 0.1),
        ModelSpec::new("cox_lasso", ModelFamily::CoxLasso).with_param("lambda", 0.05),
        ModelSpec::new("survival_tree", ModelFamily::SurvivalTree)
            .with_param("min_node_size", 10.0)
            .with_param("max_depth", 4.0),
        ModelSpec::new("random_survival_forest", ModelFamily::RandomSurvivalForest)
            .with_param("n_trees", 200.0)
            .with_param("min_node_size", 5.0),
        ModelSpec::new("boosted_cox", ModelFamily::BoostedCox)
            .with_param("n_rounds", 250.0)
            .with_param("learning_rate", 0.1),
    ]
}

/// Fit payloads, one per structural kind. Families sharing a structure
/// share a payload (both nonparametric estimators store one curve; all
/// proportional-hazards variants store coefficients plus a baseline).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FitState {
    Baseline { curve: SurvivalCurve },
    Cox(CoxFit),
    Tree { tree: SurvivalTree },
    Forest(ForestFit),
}

/// A fitted zoo member: the [`ModelSpec`] it came from, the feature count
/// it was trained on, and the family-specific fit payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    spec: ModelSpec,
    n_features: usize,
    state: FitState,
}

impl FittedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn model_id(&self) -> &str {
        &self.spec.model_id
    }

    pub fn family(&self) -> ModelFamily {
        self.spec.family
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Convergence diagnostics, for families that iterate.
    pub fn convergence(&self) -> Option<(usize, f64)> {
        match &self.state {
            FitState::Cox(fit) => Some((fit.iterations, fit.gradient_norm)),
            _ => None,
        }
    }

    /// Coefficients, for the proportional-hazards families.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.state {
            FitState::Cox(fit) => Some(&fit.beta),
            _ => None,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, actual: x.len() });
        }
        Ok(())
    }

    /// Predicted survival curve on the model's own grid.
    pub fn native_curve(&self, x: &[f64]) -> Result<SurvivalCurve> {
        self.check_dim(x)?;
        match &self.state {
            FitState::Baseline { curve } => Ok(curve.clone()),
            FitState::Cox(fit) => fit.survival_curve(x),
            FitState::Tree { tree } => Ok(tree.survival_curve(x)),
            FitState::Forest(fit) => Ok(fit.survival_curve(x)),
        }
    }

    /// Predicted survival resampled onto a caller grid.
    pub fn predict_survival(&self, x: &[f64], grid: &[f64]) -> Result<SurvivalCurve> {
        validate_grid(grid)?;
        self.native_curve(x)?.restrict(grid)
    }

    /// Predicted survival probability at a single time.
    pub fn survival_at(&self, x: &[f64], t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("prediction time must be a non-negative real, got {t}")));
        }
        Ok(self.native_curve(x)?.eval(t))
    }

    /// Scalar risk for ranking: the linear predictor for the
    /// proportional-hazards families, and one minus predicted survival
    /// at `horizon` for curve-only families.
    pub fn risk_score(&self, x: &[f64], horizon: f64) -> Result<f64> {
        self.check_dim(x)?;
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::InvalidArgument(format!("risk horizon must be a non-negative real, got {horizon}")));
        }
        match &self.state {
            FitState::Cox(fit) => fit.risk(x),
            _ => Ok(1.0 - self.native_curve(x)?.eval(horizon)),
        }
    }

    /// Versioned JSON payload.
    pub fn to_json(&self) -> String {
        let envelope = serde_json::json!({
            "format_version": MODEL_FORMAT_VERSION,
            "model": self,
        });
        serde_json::to_string(&envelope).expect("fitted models always serialize")
    }

    pub fn from_json(payload: &str) -> Result<FittedModel> {
        #[derive(Deserialize)]
        struct Envelope {
            format_version: u32,
            model: FittedModel,
        }
        let envelope: Envelope =
            serde_json::from_str(payload).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if envelope.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {} (this build reads {MODEL_FORMAT_VERSION})",
                envelope.format_version
            )));
        }
        Ok(envelope.model)
    }
}

/// Fits one spec on a training sample and wraps the result.
pub fn fit_model(spec: &ModelSpec, data: &TimeToEventDataset) -> Result<FittedModel> {
    spec.validate_keys()?;
    let p = data.n_features();
    let state = match spec.family {
        ModelFamily::KaplanMeier => {
            FitState::Baseline { curve: nonparametric::km_from_dataset(data)? }
        }
        ModelFamily::NelsonAalen => {
            FitState::Baseline { curve: nonparametric::na_from_dataset(data)? }
        }
        ModelFamily::CoxPh => FitState::Cox(fit_cox(data, 0.0, 0.0)?),
        ModelFamily::CoxRidge => {
            let lambda = spec.float_param("lambda", 0.1);
            FitState::Cox(fit_cox(data, lambda, 0.0)?)
        }
        ModelFamily::CoxLasso => {
            let lambda = spec.float_param("lambda", 0.05);
            FitState::Cox(fit_cox(data, 0.0, lambda)?)
        }
        ModelFamily::SurvivalTree => {
            let min_node_size = spec.usize_param("min_node_size", 10)?;
            let max_depth = spec.usize_param("max_depth", 4)?;
            FitState::Tree { tree: fit_survival_tree(data, min_node_size, max_depth)? }
        }
        ModelFamily::RandomSurvivalForest => {
            let mtry = if spec.hyperparameters.contains_key("mtry") {
                Some(spec.usize_param("mtry", 0)?)
            } else {
                None
            };
            let options = ForestOptions {
                n_trees: spec.usize_param("n_trees", 200)?,
                mtry,
                min_node_size: spec.usize_param("min_node_size", 5)?,
                bootstrap: spec.bool_param("bootstrap", true)?,
                seed: spec.usize_param("seed", 0)? as u64,
            };
            FitState::Forest(fit_random_survival_forest(data, &options)?)
        }
        ModelFamily::BoostedCox => {
            let n_rounds = spec.usize_param("n_rounds", 250)?;
            let rate = spec.float_param("learning_rate", 0.1);
            let seed = spec.usize_param("seed", 0)? as u64;
            FitState::Cox(fit_boosted_cox(data, n_rounds, rate, seed)?)
        }
    };
    Ok(FittedModel { spec: spec.clone(), n_features: p, state })
}
