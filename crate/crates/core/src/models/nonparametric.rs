//! Product-limit and cumulative-hazard estimators on right-censored
//! samples. These also supply the building blocks other models reuse:
//! event tables, and the censoring-distribution estimate needed for
//! inverse-probability-of-censoring weights.

use crate::curve::SurvivalCurve;
use crate::dataset::TimeToEventDataset;
use crate::error::{Error, Result};

/// Counts at one distinct event time: `events` failures out of `at_risk`
/// subjects still under observation just before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventCount {
    pub time: f64,
    pub events: u64,
    pub at_risk: u64,
}

/// Distinct event times in increasing order with event and at-risk
/// counts. Censored subjects tied with an event time are still at risk
/// at that time. Times must be positive and finite (panics otherwise;
/// datasets enforce this upstream).
pub fn event_table(times: &[f64], events: &[bool]) -> Vec<EventCount> {
    assert_eq!(times.len(), events.len());
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let n = times.len();
    let mut table = Vec::new();
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        assert!(t.is_finite() && t > 0.0, "observation times must be positive and finite");
        let at_risk = (n - i) as u64;
        let mut d = 0u64;
        let mut j = i;
        while j < n && times[order[j]] == t {
            if events[order[j]] {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            table.push(EventCount { time: t, events: d, at_risk });
        }
        i = j;
    }
    table
}

/// Product-limit survival estimate over the distinct event times.
pub fn kaplan_meier_curve(times: &[f64], events: &[bool]) -> Result<SurvivalCurve> {
    let table = event_table(times, events);
    if table.is_empty() {
        return Err(Error::NoEvents);
    }
    let mut s = 1.0;
    let mut grid = Vec::with_capacity(table.len());
    let mut probs = Vec::with_capacity(table.len());
    for row in &table {
        s *= 1.0 - row.events as f64 / row.at_risk as f64;
        grid.push(row.time);
        probs.push(s.clamp(0.0, 1.0));
    }
    SurvivalCurve::new(grid, probs)
}

/// Cumulative hazard estimate: running sum of d_j / n_j over the distinct
/// event times.
pub fn nelson_aalen_cumhaz(times: &[f64], events: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
    let table = event_table(times, events);
    if table.is_empty() {
        return Err(Error::NoEvents);
    }
    let mut h = 0.0;
    let mut grid = Vec::with_capacity(table.len());
    let mut cumhaz = Vec::with_capacity(table.len());
    for row in &table {
        h += row.events as f64 / row.at_risk as f64;
        grid.push(row.time);
        cumhaz.push(h);
    }
    Ok((grid, cumhaz))
}

/// Survival via the cumulative hazard: S(t) = exp(-H(t)).
pub fn nelson_aalen_curve(times: &[f64], events: &[bool]) -> Result<SurvivalCurve> {
    let (grid, cumhaz) = nelson_aalen_cumhaz(times, events)?;
    let probs = cumhaz.iter().map(|h| (-h).exp().clamp(0.0, 1.0)).collect();
    SurvivalCurve::new(grid, probs)
}

/// Product-limit estimate of the censoring distribution G(t): the usual
/// estimator with the event indicator flipped. A sample with no censored
/// observations yields the constant curve G(t) = 1, which is exactly the
/// weight function wanted in that case.
pub fn censoring_km(times: &[f64], events: &[bool]) -> SurvivalCurve {
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    match kaplan_meier_curve(times, &flipped) {
        Ok(curve) => curve,
        Err(_) => SurvivalCurve::constant_one(),
    }
}

pub(crate) fn km_from_dataset(data: &TimeToEventDataset) -> Result<SurvivalCurve> {
    kaplan_meier_curve(&data.times(), &data.events())
}

pub(crate) fn na_from_dataset(data: &TimeToEventDataset) -> Result<SurvivalCurve> {
    nelson_aalen_curve(&data.times(), &data.events())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn product_limit_matches_hand_computation_without_censoring() {
        // Three subjects failing at 1, 2, 3: S = 2/3, 1/3, 0.
        let c = kaplan_meier_curve(&[1.0, 2.0, 3.0], &[true, true, true]).unwrap();
        assert_eq!(c.times(), &[1.0, 2.0, 3.0]);
        assert_relative_eq!(c.probs()[0], 2.0 / 3.0);
        assert_relative_eq!(c.probs()[1], 1.0 / 3.0);
        assert_relative_eq!(c.probs()[2], 0.0);
    }

    #[test]
    fn product_limit_matches_hand_computation_with_censoring() {
        // Failures at 1 and 3, censoring at 2: S(1) = 2/3, S(3) = 0.
        let c = kaplan_meier_curve(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        assert_eq!(c.times(), &[1.0, 3.0]);
        assert_relative_eq!(c.probs()[0], 2.0 / 3.0);
        assert_relative_eq!(c.probs()[1], 0.0);
        assert_relative_eq!(c.eval(2.5), 2.0 / 3.0);
    }

    #[test]
    fn cumulative_hazard_matches_hand_computation() {
        let (grid, h) = nelson_aalen_cumhaz(&[1.0, 2.0, 3.0], &[true, true, true]).unwrap();
        assert_eq!(grid, vec![1.0, 2.0, 3.0]);
        assert_relative_eq!(h[0], 1.0 / 3.0);
        assert_relative_eq!(h[1], 1.0 / 3.0 + 1.0 / 2.0);
        assert_relative_eq!(h[2], 1.0 / 3.0 + 1.0 / 2.0 + 1.0);
        let c = nelson_aalen_curve(&[1.0, 2.0, 3.0], &[true, true, true]).unwrap();
        assert_relative_eq!(c.probs()[2], (-11.0f64 / 6.0).exp());
    }

    #[test]
    fn tied_event_times_share_one_risk_set() {
        // Two failures at t=2 with 4 at risk, one censored tie stays at risk.
        let times = [2.0, 2.0, 2.0, 5.0];
        let events = [true, true, false, true];
        let table = event_table(&times, &events);
        assert_eq!(table.len(), 2);
        assert_eq!(table[0], EventCount { time: 2.0, events: 2, at_risk: 4 });
        assert_eq!(table[1], EventCount { time: 5.0, events: 1, at_risk: 1 });
        let c = kaplan_meier_curve(&times, &events).unwrap();
        assert_relative_eq!(c.probs()[0], 0.5);
    }

    #[test]
    fn no_events_is_an_error() {
        assert!(matches!(kaplan_meier_curve(&[1.0, 2.0], &[false, false]), Err(Error::NoEvents)));
        assert!(matches!(nelson_aalen_cumhaz(&[1.0], &[false]), Err(Error::NoEvents)));
    }

    #[test]
    fn censoring_estimate_flips_the_indicator() {
        // All observed events: nothing censors, G is constant one.
        let g = censoring_km(&[1.0, 2.0], &[true, true]);
        assert!(g.is_empty());
        assert_eq!(g.eval(10.0), 1.0);
        // One censoring at t=2 with two subjects still at risk there:
        // G drops to 1/2.
        let g = censoring_km(&[1.0, 2.0, 3.0], &[true, false, true]);
        assert_eq!(g.times(), &[2.0]);
        assert_relative_eq!(g.probs()[0], 0.5);
        assert_eq!(g.eval_left(2.0), 1.0);
    }
}
