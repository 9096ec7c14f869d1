//! Proportional-hazards regression with the Breslow convention for tied
//! event times and a Breslow baseline hazard.
//!
//! The penalized objective, on the per-observation scale, is
//!
//! ```text
//! minimize  -pl(beta)/n + l1 * |beta|_1 + (l2/2) * |beta|^2
//! ```
//!
//! Smooth fits (`l1 = 0`) run Newton-Raphson with step halving; any
//! lasso weight switches to cyclic coordinate descent with a proximal
//! update per coordinate. Both report iteration count and the final
//! first-order residual.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::curve::SurvivalCurve;
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};

const MAX_NEWTON_ITERATIONS: usize = 100;
const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 1000;
const DELTA_TOLERANCE: f64 = 1e-9;
/// On standardized covariates, coefficients this large mean the
/// likelihood is monotone (perfect separation), not that a maximum lies
/// out there.
const SEPARATION_BOUND: f64 = 15.0;

/// A converged proportional-hazards fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub beta: Vec<f64>,
    /// Distinct event times, increasing.
    pub baseline_times: Vec<f64>,
    /// Breslow cumulative baseline hazard at those times.
    pub baseline_cumhaz: Vec<f64>,
    pub iterations: usize,
    /// First-order residual at exit (sup-norm, per-observation scale).
    pub gradient_norm: f64,
}

impl CoxFit {
    /// Linear predictor beta . x.
    pub fn risk(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.beta.len() {
            return Err(Error::DimensionMismatch { expected: self.beta.len(), actual: x.len() });
        }
        Ok(self.beta.iter().zip(x).map(|(b, v)| b * v).sum())
    }

    /// S(t | x) = exp(-H0(t) * exp(beta . x)) on the baseline grid.
    pub fn survival_curve(&self, x: &[f64]) -> Result<SurvivalCurve> {
        let r = self.risk(x)?.exp();
        let mut probs = Vec::with_capacity(self.baseline_cumhaz.len());
        let mut prev = 1.0f64;
        for &h in &self.baseline_cumhaz {
            let s = (-h * r).exp().clamp(0.0, 1.0).min(prev);
            probs.push(s);
            prev = s;
        }
        SurvivalCurve::new(self.baseline_times.clone(), probs)
    }
}

/// Preprocessed sample: covariate matrix plus a descending-time sweep
/// order so risk sets grow incrementally.
pub(crate) struct CoxProblem {
    x: Array2<f64>,
    time: Vec<f64>,
    event: Vec<bool>,
    desc: Vec<usize>,
    n: usize,
    p: usize,
}

impl CoxProblem {
    pub(crate) fn new(data: &TimeToEventDataset) -> Self {
        let x = data.covariate_matrix();
        let time = data.times();
        let event = data.events();
        let mut desc: Vec<usize> = (0..time.len()).collect();
        desc.sort_by(|&a, &b| time[b].total_cmp(&time[a]));
        let n = time.len();
        let p = x.ncols();
        Self { x, time, event, desc, n, p }
    }

    fn eta(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| beta.iter().enumerate().map(|(j, b)| b * self.x[[i, j]]).sum())
            .collect()
    }

    /// Breslow partial log-likelihood. Risk-set sums are shifted by
    /// max(eta) so large linear predictors cannot overflow.
    fn log_likelihood(&self, eta: &[f64]) -> f64 {
        let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
        let mut ll = 0.0;
        let mut s0 = 0.0;
        let mut i = 0;
        while i < self.n {
            let t = self.time[self.desc[i]];
            let mut j = i;
            while j < self.n && self.time[self.desc[j]] == t {
                s0 += (eta[self.desc[j]] - m).exp();
                j += 1;
            }
            for &idx in &self.desc[i..j] {
                if self.event[idx] {
                    ll += eta[idx] - m - s0.ln();
                }
            }
            i = j;
        }
        ll
    }

    /// Log-likelihood, gradient and Hessian in one descending sweep.
    fn ll_grad_hess(&self, eta: &[f64]) -> (f64, Array1<f64>, Array2<f64>) {
        let p = self.p;
        let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
        let mut ll = 0.0;
        let mut grad = Array1::zeros(p);
        let mut hess = Array2::zeros((p, p));
        let mut s0 = 0.0;
        let mut s1 = Array1::<f64>::zeros(p);
        let mut s2 = Array2::<f64>::zeros((p, p));
        let mut i = 0;
        while i < self.n {
            let t = self.time[self.desc[i]];
            let mut j = i;
            while j < self.n && self.time[self.desc[j]] == t {
                let idx = self.desc[j];
                let w = (eta[idx] - m).exp();
                s0 += w;
                for a in 0..p {
                    let xa = self.x[[idx, a]];
                    s1[a] += w * xa;
                    for b in a..p {
                        s2[[a, b]] += w * xa * self.x[[idx, b]];
                    }
                }
                j += 1;
            }
            for &idx in &self.desc[i..j] {
                if !self.event[idx] {
                    continue;
                }
                ll += eta[idx] - m - s0.ln();
                for a in 0..p {
                    let mean_a = s1[a] / s0;
                    grad[a] += self.x[[idx, a]] - mean_a;
                    for b in a..p {
                        hess[[a, b]] -= s2[[a, b]] / s0 - mean_a * (s1[b] / s0);
                    }
                }
            }
            i = j;
        }
        for a in 0..p {
            for b in 0..a {
                hess[[a, b]] = hess[[b, a]];
            }
        }
        (ll, grad, hess)
    }

    /// First and second derivative of the log-likelihood in the single
    /// coordinate `k`, at linear predictor `eta`.
    fn coordinate_derivatives(&self, eta: &[f64], k: usize) -> (f64, f64) {
        let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
        let mut g = 0.0;
        let mut h = 0.0;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut i = 0;
        while i < self.n {
            let t = self.time[self.desc[i]];
            let mut j = i;
            while j < self.n && self.time[self.desc[j]] == t {
                let idx = self.desc[j];
                let w = (eta[idx] - m).exp();
                let xk = self.x[[idx, k]];
                s0 += w;
                s1 += w * xk;
                s2 += w * xk * xk;
                j += 1;
            }
            for &idx in &self.desc[i..j] {
                if self.event[idx] {
                    let mean = s1 / s0;
                    g += self.x[[idx, k]] - mean;
                    h -= s2 / s0 - mean * mean;
                }
            }
            i = j;
        }
        (g, h)
    }

    /// Breslow cumulative baseline hazard under linear predictor `eta`:
    /// H0(t) = sum over event times t_j <= t of d_j / sum_{T_i >= t_j} exp(eta_i).
    fn breslow_baseline(&self, eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut s0 = 0.0;
        let mut steps: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < self.n {
            let t = self.time[self.desc[i]];
            let mut j = i;
            let mut d = 0u64;
            while j < self.n && self.time[self.desc[j]] == t {
                let idx = self.desc[j];
                s0 += eta[idx].exp();
                if self.event[idx] {
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
        let mut times = Vec::with_capacity(steps.len());
        let mut cumhaz = Vec::with_capacity(steps.len());
        let mut h = 0.0;
        for (t, inc) in steps {
            h += inc;
            times.push(t);
            cumhaz.push(h);
        }
        (times, cumhaz)
    }
}

fn check_beta_dim(data: &TimeToEventDataset, beta: &[f64]) -> Result<()> {
    if beta.len() != data.n_features() {
        return Err(Error::DimensionMismatch { expected: data.n_features(), actual: beta.len() });
    }
    if let Some(bad) = beta.iter().find(|b| !b.is_finite()) {
        return Err(Error::InvalidArgument(format!("coefficient {bad} is not finite")));
    }
    Ok(())
}

/// Breslow partial log-likelihood at an arbitrary coefficient vector.
pub fn cox_log_likelihood(data: &TimeToEventDataset, beta: &[f64]) -> Result<f64> {
    check_beta_dim(data, beta)?;
    let problem = CoxProblem::new(data);
    Ok(problem.log_likelihood(&problem.eta(beta)))
}

/// Gradient of the Breslow partial log-likelihood.
pub fn cox_gradient(data: &TimeToEventDataset, beta: &[f64]) -> Result<Vec<f64>> {
    check_beta_dim(data, beta)?;
    let problem = CoxProblem::new(data);
    let (_, grad, _) = problem.ll_grad_hess(&problem.eta(beta));
    Ok(grad.to_vec())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves a symmetric positive-definite system by Cholesky, escalating a
/// diagonal jitter if the factorization stalls numerically.
fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let p = b.len();
    let scale = (0..p).map(|i| a[[i, i]].abs()).fold(0.0f64, f64::max).max(1.0);
    let mut jitter = 0.0;
    for _ in 0..6 {
        if let Some(x) = cholesky_solve(a, b, jitter) {
            return Some(x);
        }
        jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 100.0 };
    }
    None
}

fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>, jitter: f64) -> Option<Array1<f64>> {
    let p = b.len();
    let mut l = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[[i, j]] + if i == j { jitter } else { 0.0 };
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    // Forward then back substitution.
    let mut y = Array1::<f64>::zeros(p);
    for i in 0..p {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(p);
    for i in (0..p).rev() {
        let mut sum = y[i];
        for k in i + 1..p {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    Some(x)
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

struct Solution {
    beta: Vec<f64>,
    iterations: usize,
    gradient_norm: f64,
}

fn newton_fit(problem: &CoxProblem, l2: f64) -> Result<Solution> {
    let n = problem.n as f64;
    let p = problem.p;
    let mut beta = vec![0.0; p];
    let mut iterations = 0;
    loop {
        let eta = problem.eta(&beta);
        let (ll, grad, hess) = problem.ll_grad_hess(&eta);
        let objective = ll / n - 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>();
        let residual: Vec<f64> = (0..p).map(|k| grad[k] / n - l2 * beta[k]).collect();
        let norm = inf_norm(&residual);
        // A monotone likelihood can make the gradient numerically vanish
        // at huge coefficients, so the runaway check must precede the
        // convergence return.
        if l2 == 0.0 && inf_norm(&beta) > SEPARATION_BOUND {
            return Err(Error::Separation { max_coefficient: inf_norm(&beta) });
        }
        if norm < GRADIENT_TOLERANCE {
            return Ok(Solution { beta, iterations, gradient_norm: norm });
        }
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(Error::NonConvergence { iterations, gradient_norm: norm });
        }
        let mut a = Array2::<f64>::zeros((p, p));
        for i in 0..p {
            for j in 0..p {
                a[[i, j]] = -hess[[i, j]] / n + if i == j { l2 } else { 0.0 };
            }
        }
        let direction = solve_spd(&a, &Array1::from(residual.clone()))
            .ok_or(Error::NonConvergence { iterations, gradient_norm: norm })?;
        // Halve the step until the penalized objective improves.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> =
                beta.iter().zip(&direction).map(|(b, d)| b + step * d).collect();
            let cand_eta = problem.eta(&candidate);
            let cand_obj = problem.log_likelihood(&cand_eta) / n
                - 0.5 * l2 * candidate.iter().map(|b| b * b).sum::<f64>();
            if cand_obj > objective || (cand_obj - objective).abs() < 1e-15 {
                beta = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // The surface is flat along the Newton direction; treat a
            // tiny residual as converged, otherwise give up honestly.
            if norm < 1e-5 {
                return Ok(Solution { beta, iterations, gradient_norm: norm });
            }
            return Err(Error::NonConvergence { iterations, gradient_norm: norm });
        }
        iterations += 1;
    }
}

fn coordinate_descent_fit(problem: &CoxProblem, l2: f64, l1: f64) -> Result<Solution> {
    let n = problem.n as f64;
    let p = problem.p;
    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; problem.n];
    let penalized = |ll: f64, beta: &[f64]| {
        -ll / n
            + l1 * beta.iter().map(|b| b.abs()).sum::<f64>()
            + 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>()
    };
    let mut sweeps = 0;
    loop {
        let mut max_delta = 0.0f64;
        for k in 0..p {
            let (g, h) = problem.coordinate_derivatives(&eta, k);
            let first = -g / n + l2 * beta[k];
            let second = -h / n + l2;
            if second <= 1e-12 || !second.is_finite() {
                continue;
            }
            let target = soft_threshold(second * beta[k] - first, l1) / second;
            let mut delta = target - beta[k];
            if delta == 0.0 {
                continue;
            }
            let current = penalized(problem.log_likelihood(&eta), &beta);
            let mut applied = false;
            for _ in 0..12 {
                let candidate_k = beta[k] + delta;
                let cand_eta: Vec<f64> =
                    eta.iter().enumerate().map(|(i, e)| e + delta * problem.x[[i, k]]).collect();
                let mut cand_beta = beta.clone();
                cand_beta[k] = candidate_k;
                if penalized(problem.log_likelihood(&cand_eta), &cand_beta) <= current + 1e-12 {
                    beta[k] = candidate_k;
                    eta = cand_eta;
                    applied = true;
                    break;
                }
                delta *= 0.5;
            }
            if applied {
                max_delta = max_delta.max(delta.abs());
            }
        }
        sweeps += 1;
        if max_delta < DELTA_TOLERANCE || sweeps >= MAX_SWEEPS {
            // Subgradient optimality residual, coordinate-wise.
            let residual = (0..p)
                .map(|k| {
                    let (g, _) = problem.coordinate_derivatives(&eta, k);
                    let first = -g / n + l2 * beta[k];
                    if beta[k] != 0.0 {
                        (first + l1 * beta[k].signum()).abs()
                    } else {
                        (first.abs() - l1).max(0.0)
                    }
                })
                .fold(0.0f64, f64::max);
            if max_delta < DELTA_TOLERANCE {
                return Ok(Solution { beta, iterations: sweeps, gradient_norm: residual });
            }
            return Err(Error::NonConvergence { iterations: sweeps, gradient_norm: residual });
        }
    }
}

/// Fits the proportional-hazards model with ridge weight `l2` and lasso
/// weight `l1` (both zero gives the plain maximum partial-likelihood
/// fit), then attaches the Breslow baseline hazard.
pub fn fit_cox(data: &TimeToEventDataset, l2: f64, l1: f64) -> Result<CoxFit> {
    for (name, v) in [("l2", l2), ("l1", l1)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!("penalty {name} must be a non-negative real, got {v}")));
        }
    }
    if data.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let problem = CoxProblem::new(data);
    let solution =
        if l1 > 0.0 { coordinate_descent_fit(&problem, l2, l1)? } else { newton_fit(&problem, l2)? };
    let eta = problem.eta(&solution.beta);
    let (baseline_times, baseline_cumhaz) = problem.breslow_baseline(&eta);
    Ok(CoxFit {
        beta: solution.beta,
        baseline_times,
        baseline_cumhaz,
        iterations: solution.iterations,
        gradient_norm: solution.gradient_norm,
    })
}
