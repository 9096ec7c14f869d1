//! Property tests for the survival step-function invariants every
//! estimator in the crate relies on.

use proptest::prelude::*;
use survband_core::curve::validate_grid;
use survband_core::{mean_curve, SurvivalCurve};

/// Arbitrary valid curve: strictly increasing positive times, probs
/// sorted non-increasing within [0, 1]. An empty vector yields the
/// constant-one curve.
fn curve_strategy() -> impl Strategy<Value = SurvivalCurve> {
    prop::collection::vec((0.01f64..5.0, 0.0f64..1.0), 0..16).prop_map(|steps| {
        let mut t = 0.0;
        let mut times = Vec::with_capacity(steps.len());
        let mut probs = Vec::with_capacity(steps.len());
        for (dt, p) in &steps {
            t += dt;
            times.push(t);
            probs.push(*p);
        }
        probs.sort_by(|a, b| b.total_cmp(a));
        SurvivalCurve::new(times, probs).expect("strategy builds valid curves")
    })
}

/// Arbitrary strictly increasing non-negative grid.
fn grid_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..5.0, 1..12).prop_map(|deltas| {
        let mut t = 0.0;
        deltas
            .into_iter()
            .map(|dt| {
                t += dt;
                t
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn eval_is_monotone_and_bounded(curve in curve_strategy(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
        let s1 = curve.eval(t1);
        let s2 = curve.eval(t2);
        prop_assert!((0.0..=1.0).contains(&s1));
        prop_assert!((0.0..=1.0).contains(&s2));
        prop_assert!(s1 >= s2, "S({t1}) = {s1} < S({t2}) = {s2}");
    }

    #[test]
    fn eval_is_one_before_the_first_jump(curve in curve_strategy(), t in 0.0f64..100.0) {
        if curve.times().first().map(|&t0| t < t0).unwrap_or(true) {
            prop_assert_eq!(curve.eval(t), 1.0);
        }
    }

    #[test]
    fn left_limit_never_lies_below_the_value(curve in curve_strategy(), t in 0.0f64..100.0) {
        prop_assert!(curve.eval_left(t) >= curve.eval(t));
    }

    #[test]
    fn extrapolation_holds_the_last_value(curve in curve_strategy(), extra in 0.0f64..50.0) {
        let last = curve.times().last().copied().unwrap_or(0.0);
        let expected = curve.probs().last().copied().unwrap_or(1.0);
        prop_assert_eq!(curve.eval(last + extra), expected);
    }

    #[test]
    fn restrict_agrees_with_the_source_on_the_grid(curve in curve_strategy(), grid in grid_strategy()) {
        validate_grid(&grid).unwrap();
        let restricted = curve.restrict(&grid).unwrap();
        for &t in &grid {
            prop_assert_eq!(restricted.eval(t), curve.eval(t), "t = {}", t);
        }
        // Beyond the grid both hold the value at the last grid time.
        let last = grid[grid.len() - 1];
        prop_assert_eq!(restricted.eval(last + 10.0), curve.eval(last));
    }

    #[test]
    fn restricting_twice_to_the_same_grid_is_idempotent(curve in curve_strategy(), grid in grid_strategy()) {
        let once = curve.restrict(&grid).unwrap();
        let twice = once.restrict(&grid).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn json_round_trip_is_exact(curve in curve_strategy()) {
        let json = serde_json::to_string(&curve).unwrap();
        let back: SurvivalCurve = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(curve, back);
    }

    #[test]
    fn mean_lies_between_the_pointwise_extremes(
        curves in prop::collection::vec(curve_strategy(), 1..5),
        grid in grid_strategy(),
    ) {
        let mean = mean_curve(&curves, &grid).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let values: Vec<f64> = curves.iter().map(|c| c.eval(t)).collect();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mean.probs()[i] >= lo - 1e-12);
            prop_assert!(mean.probs()[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn mean_of_copies_is_the_curve_itself(curve in curve_strategy(), grid in grid_strategy()) {
        let mean = mean_curve(&[curve.clone(), curve.clone(), curve.clone()], &grid).unwrap();
        let restricted = curve.restrict(&grid).unwrap();
        for (m, r) in mean.probs().iter().zip(restricted.probs()) {
            prop_assert!((m - r).abs() < 1e-12);
        }
    }
}
