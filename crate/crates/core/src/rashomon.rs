//! Near-optimal model sets and the band of survival curves they span.
//!
//! Given held-out losses for a zoo, the set keeps every model whose loss
//! is within `epsilon` of the best (boundary included). Pointwise
//! minimum and maximum of the members' predicted curves then form a
//! band over time: its width is a direct, visual measure of how much
//! models that fit the data almost equally well still disagree about
//! survival.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curve::{mean_curve, validate_grid, SurvivalCurve};
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};
use crate::eval::EvaluationRecord;
use crate::models::FittedModel;

/// Held-out loss used for set membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionLoss {
    /// 1 - concordance index.
    OneMinusCIndex,
    /// Integrated inverse-censoring-weighted Brier score.
    IntegratedBrier,
}

impl SelectionLoss {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionLoss::OneMinusCIndex => "one_minus_c_index",
            SelectionLoss::IntegratedBrier => "integrated_brier",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "one_minus_c_index" => Ok(SelectionLoss::OneMinusCIndex),
            "integrated_brier" => Ok(SelectionLoss::IntegratedBrier),
            other => Err(Error::UnknownLoss(other.to_string())),
        }
    }

    fn of(&self, record: &EvaluationRecord) -> f64 {
        match self {
            SelectionLoss::OneMinusCIndex => 1.0 - record.c_index,
            SelectionLoss::IntegratedBrier => record.integrated_brier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberScore {
    pub model_id: String,
    pub loss: f64,
}

/// Models within `epsilon` of the best held-out loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearOptimalSet {
    pub epsilon: f64,
    pub loss_name: String,
    pub best_model_id: String,
    pub best_loss: f64,
    /// Ascending by loss, ties by model id. Always contains the best.
    pub members: Vec<MemberScore>,
}

impl NearOptimalSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_ids(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.model_id.as_str()).collect()
    }

    pub fn contains(&self, model_id: &str) -> bool {
        self.members.iter().any(|m| m.model_id == model_id)
    }
}

/// Selects every model whose loss is at most `best + epsilon` (boundary
/// ties included). `loss_name` picks the loss column; unknown names are
/// an error.
pub fn build_near_optimal_set(
    records: &[EvaluationRecord],
    epsilon: f64,
    loss_name: &str,
) -> Result<NearOptimalSet> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("cannot select from an empty evaluation".into()));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be a non-negative real, got {epsilon}")));
    }
    let loss = SelectionLoss::parse(loss_name)?;
    let mut scored: Vec<MemberScore> = records
        .iter()
        .map(|r| {
            let value = loss.of(r);
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "model {:?} has non-finite loss {value}",
                    r.model_id
                )));
            }
            Ok(MemberScore { model_id: r.model_id.clone(), loss: value })
        })
        .collect::<Result<Vec<MemberScore>>>()?;
    scored.sort_by(|a, b| a.loss.total_cmp(&b.loss).then_with(|| a.model_id.cmp(&b.model_id)));
    let best = scored[0].clone();
    let threshold = best.loss + epsilon;
    let members: Vec<MemberScore> = scored.into_iter().filter(|m| m.loss <= threshold).collect();
    Ok(NearOptimalSet {
        epsilon,
        loss_name: loss.as_str().to_string(),
        best_model_id: best.model_id,
        best_loss: best.loss,
        members,
    })
}

/// What the member curves predict over: one covariate vector, or the
/// average over a dataset's units (one mean curve per model).
pub enum EnvelopeTarget<'a> {
    Individual(&'a [f64]),
    Population(&'a TimeToEventDataset),
}

/// Pointwise band spanned by the member curves on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEnvelope {
    pub grid: Vec<f64>,
    /// Pointwise minimum over members.
    pub lower: Vec<f64>,
    /// Pointwise maximum over members.
    pub upper: Vec<f64>,
    /// The best model's curve on the same grid.
    pub reference: SurvivalCurve,
    pub member_curves: BTreeMap<String, SurvivalCurve>,
}

impl SurvivalEnvelope {
    /// Band width upper - lower as a step function of time.
    pub fn width_at(&self, t: f64) -> Result<f64> {
        let (start, end) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !t.is_finite() || t < start || t > end {
            return Err(Error::ProbeOutsideGrid { time: t, start, end });
        }
        let idx = self.grid.partition_point(|&u| u <= t);
        // t >= start guarantees idx >= 1.
        Ok(self.upper[idx - 1] - self.lower[idx - 1])
    }
}

/// Builds the band for the given member set. Every member id must have
/// a fitted model; curves are evaluated on `grid` (individual target)
/// or averaged over the dataset's units (population target).
pub fn build_envelope(
    set: &NearOptimalSet,
    models: &[FittedModel],
    target: &EnvelopeTarget<'_>,
    grid: &[f64],
) -> Result<SurvivalEnvelope> {
    validate_grid(grid)?;
    if let EnvelopeTarget::Population(data) = target {
        if data.n_units() == 0 {
            return Err(Error::InvalidArgument("population target has no units".into()));
        }
    }
    let mut member_curves = BTreeMap::new();
    for member in &set.members {
        let model = models
            .iter()
            .find(|m| m.model_id() == member.model_id)
            .ok_or_else(|| Error::MissingMemberModel(member.model_id.clone()))?;
        let curve = match target {
            EnvelopeTarget::Individual(x) => model.predict_survival(x, grid)?,
            EnvelopeTarget::Population(data) => {
                let curves = data
                    .rows()
                    .iter()
                    .map(|row| model.predict_survival(&row.covariates, grid))
                    .collect::<Result<Vec<SurvivalCurve>>>()?;
                mean_curve(&curves, grid)?
            }
        };
        member_curves.insert(member.model_id.clone(), curve);
    }
    let reference = member_curves
        .get(&set.best_model_id)
        .cloned()
        .ok_or_else(|| Error::MissingMemberModel(set.best_model_id.clone()))?;
    let mut lower = vec![f64::INFINITY; grid.len()];
    let mut upper = vec![f64::NEG_INFINITY; grid.len()];
    for curve in member_curves.values() {
        for (i, &p) in curve.probs().iter().enumerate() {
            lower[i] = lower[i].min(p);
            upper[i] = upper[i].max(p);
        }
    }
    debug_assert!(lower
        .iter()
        .zip(reference.probs())
        .zip(&upper)
        .all(|((lo, r), up)| lo <= r && r <= up));
    Ok(SurvivalEnvelope { grid: grid.to_vec(), lower, upper, reference, member_curves })
}

/// Width summaries of a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeStats {
    /// (probe time, width) pairs.
    pub width_at: Vec<(f64, f64)>,
    /// Mean width over the grid.
    pub mean_width: f64,
    /// Largest width over the grid.
    pub max_width: f64,
    /// Earliest grid time attaining the largest width.
    pub argmax_time: f64,
}

/// Summarizes band widths; every probe must lie within the grid span.
pub fn envelope_stats(envelope: &SurvivalEnvelope, probe_times: &[f64]) -> Result<EnvelopeStats> {
    let widths: Vec<f64> =
        envelope.upper.iter().zip(&envelope.lower).map(|(u, l)| u - l).collect();
    let mean_width = widths.iter().sum::<f64>() / widths.len() as f64;
    let mut max_width = f64::NEG_INFINITY;
    let mut argmax_time = envelope.grid[0];
    for (i, &w) in widths.iter().enumerate() {
        if w > max_width {
            max_width = w;
            argmax_time = envelope.grid[i];
        }
    }
    let width_at = probe_times
        .iter()
        .map(|&t| Ok((t, envelope.width_at(t)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(EnvelopeStats { width_at, mean_width, max_width, argmax_time })
}
