//! Bootstrap ensembles of survival trees. Each tree sees a bootstrap
//! resample and a fresh random feature subset per split; the ensemble
//! prediction averages cumulative hazards across trees and converts back
//! to survival. Per-tree seeds are drawn up front so trees can be grown
//! in parallel without changing the result.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::SurvivalCurve;
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};
use crate::models::tree::{GrowthControls, SurvivalTree, TreeGrower};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestFit {
    pub trees: Vec<SurvivalTree>,
    /// Distinct event times of the training sample: the grid the
    /// ensemble hazard is averaged on.
    pub grid: Vec<f64>,
    pub mtry: usize,
}

impl ForestFit {
    /// Ensemble survival: S(t) = exp(-mean tree cumulative hazard).
    pub fn survival_curve(&self, x: &[f64]) -> SurvivalCurve {
        let mut acc = vec![0.0; self.grid.len()];
        for tree in &self.trees {
            for (a, h) in acc.iter_mut().zip(tree.cumulative_hazard_on(x, &self.grid)) {
                *a += h;
            }
        }
        let n = self.trees.len() as f64;
        let mut prev = 1.0f64;
        let probs = acc
            .iter()
            .map(|h| {
                let s = (-h / n).exp().clamp(0.0, 1.0).min(prev);
                prev = s;
                s
            })
            .collect();
        SurvivalCurve::new(self.grid.clone(), probs).expect("averaged hazards give a valid curve")
    }
}

pub struct ForestOptions {
    pub n_trees: usize,
    /// Features drawn per split; defaults to ceil(sqrt(p)) when None.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    /// Disable to grow every tree on the full sample (useful for
    /// comparing a one-tree forest against a plain tree).
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self { n_trees: 200, mtry: None, min_node_size: 5, bootstrap: true, seed: 0 }
    }
}

pub fn fit_random_survival_forest(data: &TimeToEventDataset, options: &ForestOptions) -> Result<ForestFit> {
    if options.n_trees == 0 {
        return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
    }
    if options.min_node_size == 0 {
        return Err(Error::InvalidArgument("min_node_size must be at least 1".into()));
    }
    let p = data.n_features();
    let mtry = match options.mtry {
        Some(m) => {
            if m == 0 || m > p {
                return Err(Error::InvalidArgument(format!(
                    "mtry must lie in 1..={p} for {p} features, got {m}"
                )));
            }
            m
        }
        None => (p as f64).sqrt().ceil() as usize,
    };
    if data.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let x = data.covariate_matrix();
    let times = data.times();
    let events = data.events();
    let n = data.n_units();

    // Event-time grid for the averaged hazard.
    let mut grid: Vec<f64> =
        times.iter().zip(&events).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut seed_rng = ChaCha8Rng::seed_from_u64(options.seed);
    let tree_seeds: Vec<u64> = (0..options.n_trees).map(|_| seed_rng.random()).collect();

    let trees: Vec<SurvivalTree> = tree_seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let members: Vec<usize> = if options.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let grower = TreeGrower {
                x: &x,
                times: &times,
                events: &events,
                controls: GrowthControls {
                    min_node_size: options.min_node_size,
                    max_depth: usize::MAX,
                    mtry: Some(mtry),
                },
            };
            grower.grow(members, Some(&mut rng))
        })
        .collect();

    Ok(ForestFit { trees, grid, mtry })
}
