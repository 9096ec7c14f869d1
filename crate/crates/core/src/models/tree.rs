//! Survival trees split by the two-sample log-rank statistic.
//!
//! Split search is exhaustive: every live feature, every midpoint
//! between consecutive distinct values. Ties in the statistic go to the
//! lowest feature index, then the lowest threshold. Leaves keep their
//! members' event table, from which both a product-limit curve and a
//! cumulative hazard can be read off (ensembles need the latter).

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::SurvivalCurve;
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};
use crate::models::nonparametric::event_table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { times: Vec<f64>, events: Vec<u64>, at_risk: Vec<u64> },
}

/// An index-arena tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTree {
    nodes: Vec<TreeNode>,
}

impl SurvivalTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                leaf @ TreeNode::Leaf { .. } => return leaf,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Product-limit curve of the leaf that `x` falls into. A leaf with
    /// no events yields the constant curve S = 1.
    pub fn survival_curve(&self, x: &[f64]) -> SurvivalCurve {
        match self.leaf_for(x) {
            TreeNode::Leaf { times, events, at_risk } => {
                let mut s = 1.0;
                let mut probs = Vec::with_capacity(times.len());
                for (d, n) in events.iter().zip(at_risk) {
                    s *= 1.0 - *d as f64 / *n as f64;
                    probs.push(s.clamp(0.0, 1.0));
                }
                SurvivalCurve::new(times.clone(), probs).expect("leaf tables are valid by construction")
            }
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    /// Cumulative hazard of the leaf that `x` falls into, evaluated at
    /// each time in `grid` with the step convention.
    pub fn cumulative_hazard_on(&self, x: &[f64], grid: &[f64]) -> Vec<f64> {
        match self.leaf_for(x) {
            TreeNode::Leaf { times, events, at_risk } => {
                let mut cum = Vec::with_capacity(times.len());
                let mut h = 0.0;
                for (d, n) in events.iter().zip(at_risk) {
                    h += *d as f64 / *n as f64;
                    cum.push(h);
                }
                grid.iter()
                    .map(|&t| {
                        let idx = times.partition_point(|&u| u <= t);
                        if idx == 0 {
                            0.0
                        } else {
                            cum[idx - 1]
                        }
                    })
                    .collect()
            }
            TreeNode::Split { .. } => unreachable!(),
        }
    }
}

pub(crate) struct GrowthControls {
    pub min_node_size: usize,
    pub max_depth: usize,
    /// Features examined per split: all of them, or a random subset of
    /// this size (requires an rng).
    pub mtry: Option<usize>,
}

/// Two-sample log-rank statistic (the squared standardized difference
/// between observed and expected events on the left side). `members`
/// must be sorted by time ascending. Returns None when the variance
/// vanishes (one side empty, or no events).
pub(crate) fn log_rank_statistic(
    times: &[f64],
    events: &[bool],
    members_by_time: &[usize],
    go_left: impl Fn(usize) -> bool,
) -> Option<f64> {
    let total = members_by_time.len();
    let mut n_left: u64 = members_by_time.iter().filter(|&&i| go_left(i)).count() as u64;
    let mut n_all: u64 = total as u64;
    let mut observed_left = 0.0;
    let mut expected_left = 0.0;
    let mut variance = 0.0;
    let mut i = 0;
    while i < total {
        let t = times[members_by_time[i]];
        let mut j = i;
        let mut d_all: u64 = 0;
        let mut d_left: u64 = 0;
        let mut leaving_left: u64 = 0;
        while j < total && times[members_by_time[j]] == t {
            let idx = members_by_time[j];
            let left = go_left(idx);
            if events[idx] {
                d_all += 1;
                if left {
                    d_left += 1;
                }
            }
            if left {
                leaving_left += 1;
            }
            j += 1;
        }
        if d_all > 0 {
            let n = n_all as f64;
            let nl = n_left as f64;
            let d = d_all as f64;
            observed_left += d_left as f64;
            expected_left += d * nl / n;
            if n_all > 1 {
                variance += d * (nl / n) * (1.0 - nl / n) * (n - d) / (n - 1.0);
            }
        }
        n_all -= (j - i) as u64;
        n_left -= leaving_left;
        i = j;
    }
    if variance > 0.0 {
        let diff = observed_left - expected_left;
        Some(diff * diff / variance)
    } else {
        None
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    statistic: f64,
}

pub(crate) struct TreeGrower<'a> {
    pub x: &'a Array2<f64>,
    pub times: &'a [f64],
    pub events: &'a [bool],
    pub controls: GrowthControls,
}

impl TreeGrower<'_> {
    /// Grows a tree over the given member multiset (bootstrap samples
    /// may repeat indices; repeated members count repeatedly in risk
    /// sets, as usual for resampled ensembles).
    pub(crate) fn grow(&self, members: Vec<usize>, rng: Option<&mut ChaCha8Rng>) -> SurvivalTree {
        let mut nodes = Vec::new();
        let mut rng = rng;
        self.grow_node(members, 0, &mut nodes, &mut rng);
        SurvivalTree { nodes }
    }

    fn grow_node(
        &self,
        members: Vec<usize>,
        depth: usize,
        nodes: &mut Vec<TreeNode>,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> usize {
        let can_split = depth < self.controls.max_depth && members.len() >= 2 * self.controls.min_node_size;
        if can_split {
            if let Some(split) = self.best_split(&members, rng) {
                let (left_members, right_members): (Vec<usize>, Vec<usize>) =
                    members.iter().partition(|&&i| self.x[[i, split.feature]] <= split.threshold);
                let at = nodes.len();
                nodes.push(TreeNode::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: 0,
                    right: 0,
                });
                let left = self.grow_node(left_members, depth + 1, nodes, rng);
                let right = self.grow_node(right_members, depth + 1, nodes, rng);
                if let TreeNode::Split { left: l, right: r, .. } = &mut nodes[at] {
                    *l = left;
                    *r = right;
                }
                return at;
            }
        }
        let member_times: Vec<f64> = members.iter().map(|&i| self.times[i]).collect();
        let member_events: Vec<bool> = members.iter().map(|&i| self.events[i]).collect();
        let table = event_table(&member_times, &member_events);
        let at = nodes.len();
        nodes.push(TreeNode::Leaf {
            times: table.iter().map(|r| r.time).collect(),
            events: table.iter().map(|r| r.events).collect(),
            at_risk: table.iter().map(|r| r.at_risk).collect(),
        });
        at
    }

    fn candidate_features(&self, rng: &mut Option<&mut ChaCha8Rng>) -> Vec<usize> {
        let p = self.x.ncols();
        match (self.controls.mtry, rng) {
            (Some(m), Some(rng)) if m < p => {
                let mut picked = rand::seq::index::sample(*rng, p, m).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&self, members: &[usize], rng: &mut Option<&mut ChaCha8Rng>) -> Option<BestSplit> {
        let mut by_time = members.to_vec();
        by_time.sort_by(|&a, &b| self.times[a].total_cmp(&self.times[b]));
        let mut best: Option<BestSplit> = None;
        for feature in self.candidate_features(rng) {
            let mut values: Vec<f64> = members.iter().map(|&i| self.x[[i, feature]]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for pair in values.windows(2) {
                let threshold = 0.5 * (pair[0] + pair[1]);
                let n_left = members.iter().filter(|&&i| self.x[[i, feature]] <= threshold).count();
                let n_right = members.len() - n_left;
                if n_left < self.controls.min_node_size || n_right < self.controls.min_node_size {
                    continue;
                }
                let stat = log_rank_statistic(self.times, self.events, &by_time, |i| {
                    self.x[[i, feature]] <= threshold
                });
                if let Some(stat) = stat {
                    // Strict improvement only: ties keep the earlier
                    // (lower feature, lower threshold) candidate.
                    if stat > 0.0 && best.as_ref().is_none_or(|b| stat > b.statistic) {
                        best = Some(BestSplit { feature, threshold, statistic: stat });
                    }
                }
            }
        }
        best
    }
}

/// Fits a single survival tree on the whole sample with every feature
/// available at every split.
pub fn fit_survival_tree(
    data: &TimeToEventDataset,
    min_node_size: usize,
    max_depth: usize,
) -> Result<SurvivalTree> {
    if min_node_size == 0 {
        return Err(Error::InvalidArgument("min_node_size must be at least 1".into()));
    }
    if data.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let x = data.covariate_matrix();
    let times = data.times();
    let events = data.events();
    let grower = TreeGrower {
        x: &x,
        times: &times,
        events: &events,
        controls: GrowthControls { min_node_size, max_depth, mtry: None },
    };
    Ok(grower.grow((0..data.n_units()).collect(), None))
}
