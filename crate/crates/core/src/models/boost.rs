//! Componentwise gradient boosting for the proportional-hazards model.
//!
//! Each round computes martingale-style score residuals under the
//! current linear predictor, regresses them on every single feature by
//! least squares, keeps only the best-fitting feature and nudges its
//! coefficient by `learning_rate` times the fitted slope. The result is
//! a sparse coefficient vector in the same form as a penalized fit,
//! with a Breslow baseline attached at the end.

use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};
use crate::models::cox::CoxFit;

/// Breslow cumulative baseline hazard under linear predictor `eta`:
/// distinct event times (ascending) and H0 at each.
fn breslow_cumhaz(times: &[f64], events: &[bool], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
    let mut s0 = 0.0;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut j = i;
        let mut d = 0u64;
        while j < n && times[order[j]] == t {
            s0 += eta[order[j]].exp();
            if events[order[j]] {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            steps.push((t, d as f64 / s0));
        }
        i = j;
    }
    steps.reverse();
    let mut grid = Vec::with_capacity(steps.len());
    let mut cumhaz = Vec::with_capacity(steps.len());
    let mut h = 0.0;
    for (t, inc) in steps {
        h += inc;
        grid.push(t);
        cumhaz.push(h);
    }
    (grid, cumhaz)
}

fn step_eval(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = grid.partition_point(|&u| u <= t);
    if idx == 0 {
        0.0
    } else {
        values[idx - 1]
    }
}

/// Boosted proportional-hazards fit. `_seed` exists for interface parity
/// with the other randomized learners; this componentwise variant uses
/// the full sample every round and is fully deterministic.
pub fn fit_boosted_cox(
    data: &TimeToEventDataset,
    n_rounds: usize,
    learning_rate: f64,
    _seed: u64,
) -> Result<CoxFit> {
    if n_rounds == 0 {
        return Err(Error::InvalidArgument("boosting needs at least one round".into()));
    }
    if !learning_rate.is_finite() || learning_rate <= 0.0 || learning_rate > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "learning_rate must lie in (0, 1], got {learning_rate}"
        )));
    }
    if data.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let x = data.covariate_matrix();
    let times = data.times();
    let events = data.events();
    let n = data.n_units();
    let p = data.n_features();

    // Per-feature squared norms for the least-squares slopes.
    let norms: Vec<f64> = (0..p).map(|j| (0..n).map(|i| x[[i, j]] * x[[i, j]]).sum()).collect();

    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    let mut score_norm = 0.0;
    for _round in 0..n_rounds {
        let (grid, cumhaz) = breslow_cumhaz(&times, &events, &eta);
        // Score residual: observed event minus expected count so far.
        let residuals: Vec<f64> = (0..n)
            .map(|i| {
                let h0 = step_eval(&grid, &cumhaz, times[i]);
                (if events[i] { 1.0 } else { 0.0 }) - eta[i].exp() * h0
            })
            .collect();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut max_score = 0.0f64;
        for j in 0..p {
            if norms[j] <= 1e-12 {
                continue;
            }
            let cross: f64 = (0..n).map(|i| residuals[i] * x[[i, j]]).sum();
            max_score = max_score.max(cross.abs());
            let slope = cross / norms[j];
            // Fit improvement of this one-feature regression.
            let gain = cross * cross / norms[j];
            let better = match &best {
                None => gain > 0.0,
                Some((_, _, best_gain)) => gain > *best_gain,
            };
            if better {
                best = Some((j, slope, gain));
            }
        }
        score_norm = max_score;
        let Some((j, slope, _)) = best else {
            break; // residuals are orthogonal to every feature
        };
        let step = learning_rate * slope;
        beta[j] += step;
        for i in 0..n {
            eta[i] += step * x[[i, j]];
        }
    }

    let (baseline_times, baseline_cumhaz) = breslow_cumhaz(&times, &events, &eta);
    Ok(CoxFit { beta, baseline_times, baseline_cumhaz, iterations: n_rounds, gradient_norm: score_norm })
}
