//! Right-continuous survival step functions.
//!
//! Every estimator in this crate reports its predictions as a
//! [`SurvivalCurve`]: a step function that starts at 1, only ever steps
//! down, and holds its last value beyond the observed horizon. The grid
//! only needs to contain the jump times; evaluation anywhere else follows
//! the usual product-limit convention (right-continuous, S(t) = 1 for t
//! before the first jump).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A survival step function S(t) sampled at its jump times.
///
/// Invariants, enforced on construction:
/// * `times` is strictly increasing and non-negative,
/// * `probs` has the same length, lies in [0, 1] and is non-increasing.
///
/// An empty curve is the constant function S(t) = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    probs: Vec<f64>,
}

impl SurvivalCurve {
    pub fn new(times: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if times.len() != probs.len() {
            return Err(Error::InvalidCurve(format!(
                "times and probs differ in length ({} vs {})",
                times.len(),
                probs.len()
            )));
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidCurve(format!("time {t} at index {i} is not a non-negative real")));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::InvalidCurve(format!(
                    "times must be strictly increasing, but times[{}] = {} <= times[{}] = {}",
                    i,
                    t,
                    i - 1,
                    times[i - 1]
                )));
            }
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidCurve(format!("probability {p} at index {i} is outside [0, 1]")));
            }
            if i > 0 && p > probs[i - 1] {
                return Err(Error::InvalidCurve(format!(
                    "probabilities must be non-increasing, but probs[{}] = {} > probs[{}] = {}",
                    i,
                    p,
                    i - 1,
                    probs[i - 1]
                )));
            }
        }
        Ok(Self { times, probs })
    }

    /// The constant curve S(t) = 1.
    pub fn constant_one() -> Self {
        Self { times: Vec::new(), probs: Vec::new() }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Evaluates S(t) with the right-continuous step convention: 1 before
    /// the first grid time, the value at the largest grid time <= t
    /// otherwise, and the last value held beyond the grid.
    pub fn eval(&self, t: f64) -> f64 {
        // Number of jump times <= t; 0 means we are left of every jump.
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            1.0
        } else {
            self.probs[idx - 1]
        }
    }

    /// Evaluates the left limit S(t-): the value just before time t.
    /// Inverse-censoring weights need this at observed event times.
    pub fn eval_left(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x < t);
        if idx == 0 {
            1.0
        } else {
            self.probs[idx - 1]
        }
    }

    /// Resamples the curve onto `grid` (strictly increasing, non-empty),
    /// evaluating at each grid point. Restriction never invents new
    /// information: the result evaluates identically on the grid span.
    pub fn restrict(&self, grid: &[f64]) -> Result<SurvivalCurve> {
        validate_grid(grid)?;
        let probs = grid.iter().map(|&t| self.eval(t)).collect();
        SurvivalCurve::new(grid.to_vec(), probs)
    }
}

/// Checks that a caller-supplied evaluation grid is non-empty, finite,
/// non-negative and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("evaluation grid is empty".into()));
    }
    for (i, &t) in grid.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("grid time {t} at index {i} is not a non-negative real")));
        }
        if i > 0 && t <= grid[i - 1] {
            return Err(Error::InvalidArgument(format!(
                "grid must be strictly increasing, but grid[{}] = {} <= grid[{}] = {}",
                i,
                t,
                i - 1,
                grid[i - 1]
            )));
        }
    }
    Ok(())
}

/// Pointwise mean of several curves on a shared grid. Errors on an empty
/// curve list or an invalid grid; the mean of valid curves is itself a
/// valid curve (monotone and within [0, 1]).
pub fn mean_curve(curves: &[SurvivalCurve], grid: &[f64]) -> Result<SurvivalCurve> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("cannot average an empty list of curves".into()));
    }
    validate_grid(grid)?;
    let n = curves.len() as f64;
    let mut acc = vec![0.0; grid.len()];
    for curve in curves {
        for (a, &t) in acc.iter_mut().zip(grid) {
            *a += curve.eval(t);
        }
    }
    let mut probs: Vec<f64> = acc.into_iter().map(|s| s / n).collect();
    // Guard against floating-point drift breaking monotonicity.
    for i in 0..probs.len() {
        probs[i] = probs[i].clamp(0.0, 1.0);
        if i > 0 && probs[i] > probs[i - 1] {
            probs[i] = probs[i - 1];
        }
    }
    SurvivalCurve::new(grid.to_vec(), probs)
}
