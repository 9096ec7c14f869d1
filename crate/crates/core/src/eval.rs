//! Discrimination and calibration scores on a held-out sample.
//!
//! Concordance follows the classic pairwise definition: a pair is
//! comparable when the earlier observed time is an event and the times
//! differ; tied risk scores earn half credit; pairs with tied times are
//! excluded. The Brier score reweights by the inverse of the censoring
//! survival estimate so censored subjects do not bias it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::SurvivalCurve;
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};
use crate::models::FittedModel;

/// Harrell's concordance index. Returns the index and the number of
/// comparable pairs; errors when no pair is comparable.
pub fn c_index(risk: &[f64], times: &[f64], events: &[bool]) -> Result<(f64, u64)> {
    let n = times.len();
    if risk.len() != n || events.len() != n {
        return Err(Error::InvalidArgument(format!(
            "c_index inputs differ in length: {} risks, {} times, {} events",
            risk.len(),
            n,
            events.len()
        )));
    }
    if let Some(bad) = risk.iter().find(|r| !r.is_finite()) {
        return Err(Error::InvalidArgument(format!("risk score {bad} is not finite")));
    }
    let mut pairs = 0u64;
    let mut credit = 0.0;
    for i in 0..n {
        for j in 0..n {
            // Comparable: i fails strictly first and is an event.
            if i == j || !events[i] || times[i] >= times[j] {
                continue;
            }
            pairs += 1;
            if risk[i] > risk[j] {
                credit += 1.0;
            } else if risk[i] == risk[j] {
                credit += 0.5;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok((credit / pairs as f64, pairs))
}

/// Inverse-censoring-weighted squared error of survival predictions at
/// horizon `t`.
///
/// Per subject: an event at or before `t` contributes its squared
/// predicted survival, weighted by 1/G(T-); a subject observed past `t`
/// contributes the squared shortfall from 1, weighted by 1/G(t);
/// subjects censored at or before `t` contribute nothing. The mean is
/// over all subjects. A zero weight denominator makes the horizon
/// inestimable.
pub fn ipcw_brier(
    predicted_survival: &[f64],
    times: &[f64],
    events: &[bool],
    t: f64,
    censoring: &SurvivalCurve,
) -> Result<f64> {
    let n = times.len();
    if predicted_survival.len() != n || events.len() != n {
        return Err(Error::InvalidArgument(format!(
            "brier inputs differ in length: {} predictions, {} times, {} events",
            predicted_survival.len(),
            n,
            events.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("cannot score an empty sample".into()));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("horizon must be a non-negative real, got {t}")));
    }
    if let Some(bad) = predicted_survival.iter().find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("predicted survival {bad} is outside [0, 1]")));
    }
    let mut total = 0.0;
    for i in 0..n {
        let s = predicted_survival[i];
        if times[i] <= t && events[i] {
            let g = censoring.eval_left(times[i]);
            if g <= 0.0 {
                return Err(Error::InestimableHorizon { time: times[i] });
            }
            total += s * s / g;
        } else if times[i] > t {
            let g = censoring.eval(t);
            if g <= 0.0 {
                return Err(Error::InestimableHorizon { time: t });
            }
            total += (1.0 - s) * (1.0 - s) / g;
        }
        // Censored at or before t: weight zero.
    }
    Ok(total / n as f64)
}

/// Brier score of a fitted model's predictions at horizon `t`.
pub fn brier_score(
    model: &FittedModel,
    test: &TimeToEventDataset,
    t: f64,
    censoring: &SurvivalCurve,
) -> Result<f64> {
    let preds = test
        .rows()
        .iter()
        .map(|row| model.survival_at(&row.covariates, t))
        .collect::<Result<Vec<f64>>>()?;
    ipcw_brier(&preds, &test.times(), &test.events(), t, censoring)
}

/// Trapezoid integral of the Brier score over increasing horizons,
/// normalized by the horizon span.
pub fn integrated_brier(
    model: &FittedModel,
    test: &TimeToEventDataset,
    horizons: &[f64],
    censoring: &SurvivalCurve,
) -> Result<f64> {
    if horizons.len() < 2 {
        return Err(Error::InvalidArgument("integrated score needs at least two horizons".into()));
    }
    if !horizons.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("horizons must be strictly increasing".into()));
    }
    let scores = horizons
        .iter()
        .map(|&t| brier_score(model, test, t, censoring))
        .collect::<Result<Vec<f64>>>()?;
    let mut integral = 0.0;
    for k in 1..horizons.len() {
        integral += 0.5 * (scores[k] + scores[k - 1]) * (horizons[k] - horizons[k - 1]);
    }
    Ok(integral / (horizons[horizons.len() - 1] - horizons[0]))
}

/// One model's held-out scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub model_id: String,
    pub c_index: f64,
    pub n_comparable_pairs: u64,
    /// (horizon, Brier score) pairs.
    pub brier_at: Vec<(f64, f64)>,
    pub integrated_brier: f64,
}

/// Scores every model on the same held-out sample. `risk_horizon` feeds
/// the risk scores of curve-only families; `censoring` must come from
/// the training split. Records come back sorted by model id; failures
/// are tagged with the offending model.
pub fn evaluate_zoo(
    models: &[FittedModel],
    test: &TimeToEventDataset,
    censoring: &SurvivalCurve,
    brier_horizons: &[f64],
    risk_horizon: f64,
) -> Result<Vec<EvaluationRecord>> {
    if models.is_empty() {
        return Err(Error::InvalidArgument("no models to evaluate".into()));
    }
    for (i, model) in models.iter().enumerate() {
        if models[..i].iter().any(|m| m.model_id() == model.model_id()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate model_id {:?} in the zoo",
                model.model_id()
            )));
        }
    }
    let times = test.times();
    let events = test.events();
    let mut records = models
        .par_iter()
        .map(|model| {
            let evaluate = || -> Result<EvaluationRecord> {
                let risks = test
                    .rows()
                    .iter()
                    .map(|row| model.risk_score(&row.covariates, risk_horizon))
                    .collect::<Result<Vec<f64>>>()?;
                let (c, pairs) = c_index(&risks, &times, &events)?;
                let brier_at = brier_horizons
                    .iter()
                    .map(|&t| Ok((t, brier_score(model, test, t, censoring)?)))
                    .collect::<Result<Vec<(f64, f64)>>>()?;
                let integrated = integrated_brier(model, test, brier_horizons, censoring)?;
                Ok(EvaluationRecord {
                    model_id: model.model_id().to_string(),
                    c_index: c,
                    n_comparable_pairs: pairs,
                    brier_at,
                    integrated_brier: integrated,
                })
            };
            evaluate().map_err(|e| Error::Evaluation {
                model_id: model.model_id().to_string(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<EvaluationRecord>>>()?;
    records.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    Ok(records)
}
