//! Canonical time-to-event sample: one row per unit with an observed
//! duration, an event indicator and a fixed-length covariate vector.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeToEventRow {
    pub unit_id: String,
    /// Observed duration: failure time if `event`, censoring time otherwise.
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

/// An immutable right-censored sample. Invariants, enforced on
/// construction:
/// * every `time` is positive and finite,
/// * every covariate vector has `feature_names.len()` finite entries,
/// * at least one row has `event = true` (otherwise every estimator in
///   this crate is degenerate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeToEventDataset {
    rows: Vec<TimeToEventRow>,
    feature_names: Vec<String>,
}

impl TimeToEventDataset {
    pub fn new(rows: Vec<TimeToEventRow>, feature_names: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        let p = feature_names.len();
        for row in &rows {
            if !row.time.is_finite() || row.time <= 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "unit {:?} has non-positive or non-finite time {}",
                    row.unit_id, row.time
                )));
            }
            if row.covariates.len() != p {
                return Err(Error::InvalidDataset(format!(
                    "unit {:?} has {} covariates, expected {}",
                    row.unit_id,
                    row.covariates.len(),
                    p
                )));
            }
            if let Some(bad) = row.covariates.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "unit {:?} has a non-finite covariate {}",
                    row.unit_id, bad
                )));
            }
        }
        if !rows.iter().any(|r| r.event) {
            return Err(Error::NoEvents);
        }
        Ok(Self { rows, feature_names })
    }

    pub fn rows(&self) -> &[TimeToEventRow] {
        &self.rows
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_units(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.event).collect()
    }

    /// Covariates as an n x p matrix in row order.
    pub fn covariate_matrix(&self) -> Array2<f64> {
        let n = self.n_units();
        let p = self.n_features();
        let mut m = Array2::zeros((n, p));
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &v) in row.covariates.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// New dataset containing the given rows, in the given order.
    /// Panics on out-of-range indices; errors if the selection has no
    /// events (the subset is then unusable for fitting).
    pub fn select(&self, indices: &[usize]) -> Result<TimeToEventDataset> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        TimeToEventDataset::new(rows, self.feature_names.clone())
    }
}

/// Per-feature location/scale transform, fitted on training data and
/// applied unchanged to held-out data so the two splits share one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &TimeToEventDataset) -> Self {
        let n = data.n_units() as f64;
        let p = data.n_features();
        let mut means = vec![0.0; p];
        for row in data.rows() {
            for (m, &v) in means.iter_mut().zip(&row.covariates) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; p];
        for row in data.rows() {
            for (j, &v) in row.covariates.iter().enumerate() {
                let d = v - means[j];
                vars[j] += d * d;
            }
        }
        // Population variance; a zero-variance column maps to zero rather
        // than dividing by zero.
        let stds = vars
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn transform_vector(&self, covariates: &[f64]) -> Vec<f64> {
        covariates
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, data: &TimeToEventDataset) -> Result<TimeToEventDataset> {
        if data.n_features() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), actual: data.n_features() });
        }
        let rows = data
            .rows()
            .iter()
            .map(|r| TimeToEventRow {
                unit_id: r.unit_id.clone(),
                time: r.time,
                event: r.event,
                covariates: self.transform_vector(&r.covariates),
            })
            .collect();
        TimeToEventDataset::new(rows, data.feature_names().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(id: &str, time: f64, event: bool, covs: &[f64]) -> TimeToEventRow {
        TimeToEventRow { unit_id: id.into(), time, event, covariates: covs.to_vec() }
    }

    #[test]
    fn construction_enforces_invariants() {
        let names = vec!["a".to_string()];
        assert!(TimeToEventDataset::new(vec![], names.clone()).is_err());
        assert!(TimeToEventDataset::new(vec![row("1", 0.0, true, &[1.0])], names.clone()).is_err());
        assert!(TimeToEventDataset::new(vec![row("1", -3.0, true, &[1.0])], names.clone()).is_err());
        assert!(TimeToEventDataset::new(vec![row("1", 1.0, true, &[1.0, 2.0])], names.clone()).is_err());
        assert!(TimeToEventDataset::new(vec![row("1", 1.0, true, &[f64::NAN])], names.clone()).is_err());
        assert!(matches!(
            TimeToEventDataset::new(vec![row("1", 1.0, false, &[1.0])], names.clone()),
            Err(Error::NoEvents)
        ));
        assert!(TimeToEventDataset::new(vec![row("1", 1.0, true, &[1.0])], names).is_ok());
    }

    #[test]
    fn standardizer_centers_train_and_reuses_stats_on_test() {
        let names = vec!["a".to_string(), "b".to_string()];
        let train = TimeToEventDataset::new(
            vec![row("1", 1.0, true, &[0.0, 10.0]), row("2", 2.0, true, &[2.0, 10.0])],
            names.clone(),
        )
        .unwrap();
        let std = Standardizer::fit(&train);
        let t = std.transform(&train).unwrap();
        assert_relative_eq!(t.rows()[0].covariates[0], -1.0);
        assert_relative_eq!(t.rows()[1].covariates[0], 1.0);
        // Constant column maps to zero instead of NaN.
        assert_relative_eq!(t.rows()[0].covariates[1], 0.0);

        let test = TimeToEventDataset::new(vec![row("3", 5.0, true, &[3.0, 11.0])], names).unwrap();
        let tt = std.transform(&test).unwrap();
        // Uses the training mean 1.0 and std 1.0, not the test statistics.
        assert_relative_eq!(tt.rows()[0].covariates[0], 2.0);
        assert_relative_eq!(tt.rows()[0].covariates[1], 1.0);
    }

    #[test]
    fn select_preserves_order_and_checks_events() {
        let names = vec!["a".to_string()];
        let data = TimeToEventDataset::new(
            vec![
                row("1", 1.0, true, &[1.0]),
                row("2", 2.0, false, &[2.0]),
                row("3", 3.0, true, &[3.0]),
            ],
            names,
        )
        .unwrap();
        let sub = data.select(&[2, 0]).unwrap();
        assert_eq!(sub.rows()[0].unit_id, "3");
        assert_eq!(sub.rows()[1].unit_id, "1");
        assert!(matches!(data.select(&[1]), Err(Error::NoEvents)));
    }
}
