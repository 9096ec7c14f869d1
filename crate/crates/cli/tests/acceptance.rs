//! Acceptance gate for the toolkit. Each test covers one release
//! criterion, enforces its runtime budget, and prints a single
//! `criterion N (<name>): PASS` line (visible with `--nocapture`).
//!
//! The oracles here are deliberately independent of the library code:
//! concordance is recounted pair by pair, the weighted Brier score is
//! expanded by hand, estimator fixtures are small enough to evaluate on
//! paper, and the likelihood gradient is checked against central finite
//! differences.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use survband_cli::config::ExperimentConfig;
use survband_cli::pipeline::run_experiment;
use survband_cli::report::{published_reference, CensorBlock, ExperimentReport};
use survband_core::eval::{c_index, ipcw_brier, EvaluationRecord};
use survband_core::ingest::{build_survival_dataset, CensoringSpec, CmapssTable, CovariateSpec};
use survband_core::models::{
    cox_gradient, cox_log_likelihood, fit_cox, fit_model, kaplan_meier_curve, nelson_aalen_cumhaz,
    nelson_aalen_curve, ModelFamily, ModelSpec,
};
use survband_core::rashomon::{
    build_envelope, build_near_optimal_set, envelope_stats, EnvelopeTarget, MemberScore,
};
use survband_core::simulate::{simulate_cox_dataset, simulate_subset, write_cmapss};
use survband_core::{CmapssSubset, Error, SurvivalCurve, TimeToEventDataset, TimeToEventRow};
use tempfile::TempDir;

fn assert_budget(start: Instant, budget: Duration, what: &str) -> Duration {
    let elapsed = start.elapsed();
    assert!(elapsed <= budget, "{what} took {elapsed:?}, budget is {budget:?}");
    elapsed
}

/// Counts concordant ordered pairs from scratch: a pair is comparable
/// when the first subject fails (not censored) strictly before the
/// second subject's observed time; the higher-risk-first pair scores 1,
/// a risk tie scores 1/2. Returns None when nothing is comparable.
fn recount_concordance(risk: &[f64], times: &[f64], events: &[bool]) -> Option<(f64, u64)> {
    let n = times.len();
    let mut pairs = 0u64;
    let mut credit = 0.0;
    for a in 0..n {
        if !events[a] {
            continue;
        }
        for b in 0..n {
            if times[a] < times[b] {
                pairs += 1;
                if risk[a] > risk[b] {
                    credit += 1.0;
                } else if risk[a] == risk[b] {
                    credit += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| (credit / pairs as f64, pairs))
}

#[test]
fn criterion_1_metric_oracles() {
    let start = Instant::now();

    // Concordance must agree exactly with the pair-by-pair recount on
    // one hundred random instances full of time and risk ties.
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut scored = 0usize;
    let mut attempts = 0usize;
    while scored < 100 {
        attempts += 1;
        assert!(attempts < 10_000, "instance generation stalled");
        let n = rng.random_range(2..=30);
        let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..=10) as f64).collect();
        let events: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.6).collect();
        let risk: Vec<f64> = (0..n).map(|_| rng.random_range(0..=6) as f64 * 0.5).collect();
        match recount_concordance(&risk, &times, &events) {
            None => {
                assert!(
                    matches!(c_index(&risk, &times, &events), Err(Error::NoComparablePairs)),
                    "library must refuse an instance with no comparable pairs"
                );
            }
            Some((want_c, want_pairs)) => {
                let (got_c, got_pairs) = c_index(&risk, &times, &events).unwrap();
                assert_eq!(got_pairs, want_pairs, "comparable pair counts differ");
                assert!(
                    got_c == want_c,
                    "concordance {got_c} differs from recount {want_c} on instance {scored}"
                );
                scored += 1;
            }
        }
    }

    // Weighted Brier score against a full hand expansion. Censoring
    // survival: G(t) = 1 before 2, 0.8 on [2, 4), 0.5 from 4 on.
    // Horizon t = 3, five subjects:
    //   time 1.5, event,    prediction 0.4: weight 1/G(1.5-) = 1,
    //     contribution 0.4^2           = 0.16
    //   time 2.5, event,    prediction 0.1: weight 1/G(2.5-) = 1/0.8,
    //     contribution 0.1^2 / 0.8     = 0.0125
    //   time 2.0, censored, prediction 0.7: censored before the horizon
    //     contributes nothing          = 0
    //   time 5.0, survivor, prediction 0.8: weight 1/G(3) = 1/0.8,
    //     contribution (1-0.8)^2 / 0.8 = 0.05
    //   time 6.0, survivor, prediction 0.1: weight 1/G(3) = 1/0.8,
    //     contribution (1-0.1)^2 / 0.8 = 1.0125
    // Mean over the five subjects: 1.235 / 5 = 0.247.
    let censoring = SurvivalCurve::new(vec![2.0, 4.0], vec![0.8, 0.5]).unwrap();
    let got = ipcw_brier(
        &[0.4, 0.1, 0.7, 0.8, 0.1],
        &[1.5, 2.5, 2.0, 5.0, 6.0],
        &[true, true, false, false, false],
        3.0,
        &censoring,
    )
    .unwrap();
    assert!((got - 0.247).abs() < 1e-12, "weighted Brier {got} is not 0.247 within 1e-12");

    let elapsed = assert_budget(start, Duration::from_secs(10), "criterion 1");
    println!(
        "criterion 1 (metric oracles): PASS: 100 concordance instances exact, \
         hand Brier within 1e-12 ({elapsed:?})"
    );
}

#[test]
fn criterion_2_estimator_correctness() {
    let start = Instant::now();

    // Product-limit estimate on five subjects, worked by hand. With
    // times [1, 2, 2, 4, 5] and events [yes, yes, no, yes, no]:
    //   t=1: 5 at risk, 1 failure -> survival 1 - 1/5
    //   t=2: 4 at risk (the tied censored subject still counts), 1
    //        failure -> multiply by 1 - 1/4
    //   t=4: 2 at risk, 1 failure -> multiply by 1 - 1/2
    let times = [1.0, 2.0, 2.0, 4.0, 5.0];
    let events = [true, true, false, true, false];
    let km = kaplan_meier_curve(&times, &events).unwrap();
    let p1 = 1.0 - 1.0 / 5.0;
    let p2 = p1 * (1.0 - 1.0 / 4.0);
    let p3 = p2 * (1.0 - 1.0 / 2.0);
    assert_eq!(km.times(), &[1.0, 2.0, 4.0]);
    assert_eq!(km.probs(), &[p1, p2, p3], "product-limit probabilities must match exactly");

    // Cumulative hazard on the same sample: running sum of d/n at the
    // same risk sets, and survival through exp(-H).
    let (grid, h) = nelson_aalen_cumhaz(&times, &events).unwrap();
    let h1 = 1.0 / 5.0;
    let h2 = h1 + 1.0 / 4.0;
    let h3 = h2 + 1.0 / 2.0;
    assert_eq!(grid, vec![1.0, 2.0, 4.0]);
    assert_eq!(h, vec![h1, h2, h3], "cumulative hazard must match the hand sum exactly");
    let na = nelson_aalen_curve(&times, &events).unwrap();
    assert_eq!(na.probs(), &[(-h1).exp(), (-h2).exp(), (-h3).exp()]);

    // A second, smaller fixture where the last survivor fails: the
    // estimate must reach exactly zero.
    let km0 = kaplan_meier_curve(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
    assert_eq!(km0.times(), &[1.0, 3.0]);
    assert_eq!(km0.probs(), &[1.0 - 1.0 / 3.0, 0.0]);

    // The analytic likelihood gradient must agree with central finite
    // differences at ten random coefficient vectors.
    let data = simulate_cox_dataset(80, &[0.5, -0.3, 0.8], 0.1, 0.05, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h_step = 1e-5;
    for point in 0..10 {
        let beta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grad = cox_gradient(&data, &beta).unwrap();
        for j in 0..3 {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[j] += h_step;
            minus[j] -= h_step;
            let fd = (cox_log_likelihood(&data, &plus).unwrap()
                - cox_log_likelihood(&data, &minus).unwrap())
                / (2.0 * h_step);
            let rel = (grad[j] - fd).abs() / grad[j].abs().max(1.0);
            assert!(
                rel < 1e-6,
                "gradient component {j} at point {point}: analytic {} vs numeric {fd}, \
                 relative error {rel}",
                grad[j]
            );
        }
    }

    // Coefficient recovery on a 500-subject sample with known truth.
    let truth = [1.0, -1.0];
    let sample = simulate_cox_dataset(500, &truth, 0.05, 0.01, 3);
    let fit = fit_cox(&sample, 0.0, 0.0).unwrap();
    for (j, (&b, &t)) in fit.beta.iter().zip(&truth).enumerate() {
        assert!(
            (b - t).abs() < 0.15,
            "coefficient {j}: fitted {b} is more than 0.15 from the true {t}"
        );
    }

    let elapsed = assert_budget(start, Duration::from_secs(30), "criterion 2");
    println!(
        "criterion 2 (estimator correctness): PASS: hand fixtures exact, gradient \
         matches finite differences below 1e-6, coefficients recovered within 0.15 \
         (fitted {:?}) ({elapsed:?})",
        fit.beta
    );
}

/// A curve-only model fitted on its own tiny random sample, so each
/// zoo member in the selection trials has a distinct survival curve.
fn random_curve_model(id: &str, rng: &mut ChaCha8Rng) -> survband_core::models::FittedModel {
    let n = rng.random_range(5..=12);
    let rows: Vec<TimeToEventRow> = (0..n)
        .map(|i| TimeToEventRow {
            unit_id: format!("{id}-{i}"),
            time: rng.random_range(1..=20) as f64,
            event: true,
            covariates: vec![],
        })
        .collect();
    let data = TimeToEventDataset::new(rows, vec![]).unwrap();
    fit_model(&ModelSpec::new(id, ModelFamily::KaplanMeier), &data).unwrap()
}

#[test]
fn criterion_3_selection_and_band_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let grid: Vec<f64> = (1..=20).map(|t| t as f64).collect();
    let mut singleton_trials = 0usize;

    for trial in 0..1000 {
        let k = rng.random_range(1..=6);
        let models: Vec<_> =
            (0..k).map(|i| random_curve_model(&format!("m{i}"), &mut rng)).collect();
        let records: Vec<EvaluationRecord> = models
            .iter()
            .map(|m| EvaluationRecord {
                model_id: m.model_id().to_string(),
                c_index: 0.5,
                n_comparable_pairs: 1,
                brier_at: vec![],
                integrated_brier: rng.random::<f64>(),
            })
            .collect();
        let best_loss =
            records.iter().map(|r| r.integrated_brier).fold(f64::INFINITY, f64::min);

        // Tolerance sweep: twenty thresholds, sorted ascending.
        let mut epsilons: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 0.9).collect();
        epsilons.sort_by(f64::total_cmp);
        let sets: Vec<_> = epsilons
            .iter()
            .map(|&e| build_near_optimal_set(&records, e, "integrated_brier").unwrap())
            .collect();

        for set in &sets {
            // The best model is always a member, and membership is
            // exactly the threshold rule.
            assert_eq!(set.best_loss, best_loss, "trial {trial}");
            assert!(set.members.iter().any(|m| m.model_id == set.best_model_id));
            for r in &records {
                let inside = r.integrated_brier <= set.best_loss + set.epsilon;
                let member = set.members.iter().any(|m| m.model_id == r.model_id);
                assert_eq!(inside, member, "trial {trial}: membership violates the threshold");
            }
        }
        // Growing the tolerance never drops a member and never changes
        // the winner.
        for pair in sets.windows(2) {
            assert_eq!(pair[0].best_model_id, pair[1].best_model_id);
            for m in &pair[0].members {
                assert!(
                    pair[1].members.iter().any(|n| n.model_id == m.model_id),
                    "trial {trial}: sets failed to nest"
                );
            }
        }

        // The band contains every member curve pointwise.
        let widest = sets.last().unwrap();
        let envelope =
            build_envelope(widest, &models, &EnvelopeTarget::Individual(&[]), &grid).unwrap();
        for (id, curve) in &envelope.member_curves {
            for (i, &p) in curve.probs().iter().enumerate() {
                assert!(
                    envelope.lower[i] <= p && p <= envelope.upper[i],
                    "trial {trial}: member {id} escapes the band at index {i}"
                );
            }
        }
        for (i, &p) in envelope.reference.probs().iter().enumerate() {
            assert!(envelope.lower[i] <= p && p <= envelope.upper[i]);
        }

        // Adding a member can only widen the band.
        let narrow = sets.first().unwrap();
        let narrow_envelope =
            build_envelope(narrow, &models, &EnvelopeTarget::Individual(&[]), &grid).unwrap();
        if let Some(extra) =
            models.iter().find(|m| narrow.members.iter().all(|n| n.model_id != m.model_id()))
        {
            let mut extended = narrow.clone();
            extended
                .members
                .push(MemberScore { model_id: extra.model_id().to_string(), loss: 1.0 });
            let widened =
                build_envelope(&extended, &models, &EnvelopeTarget::Individual(&[]), &grid)
                    .unwrap();
            for i in 0..grid.len() {
                let before = narrow_envelope.upper[i] - narrow_envelope.lower[i];
                let after = widened.upper[i] - widened.lower[i];
                assert!(
                    after >= before,
                    "trial {trial}: band shrank from {before} to {after} after adding a member"
                );
            }
        }

        // A zero tolerance leaves only the winner, and one member means
        // a band of exactly zero width.
        let tight = build_near_optimal_set(&records, 0.0, "integrated_brier").unwrap();
        if tight.len() == 1 {
            singleton_trials += 1;
            let e = build_envelope(&tight, &models, &EnvelopeTarget::Individual(&[]), &grid)
                .unwrap();
            let stats = envelope_stats(&e, &[]).unwrap();
            assert_eq!(stats.max_width, 0.0, "trial {trial}: singleton band has width");
        }
    }
    assert!(singleton_trials > 900, "zero-tolerance sets were almost never singletons");

    let elapsed = assert_budget(start, Duration::from_secs(10), "criterion 3");
    println!(
        "criterion 3 (selection and band properties): PASS: 1000 trials; membership, \
         nesting over 20 tolerances, containment, growth, and {singleton_trials} \
         singleton bands of zero width ({elapsed:?})"
    );
}

#[test]
fn criterion_4_censoring_mechanics() {
    let start = Instant::now();
    let records = simulate_subset(CmapssSubset::Fd001, 42);
    let table = CmapssTable::from_records(records.clone()).unwrap();
    let covariates = CovariateSpec::default();

    // Longer administrative horizons can only reveal more failures.
    let mut event_counts = Vec::new();
    for t in [200.0, 225.0, 250.0] {
        let data =
            build_survival_dataset(&table, &CensoringSpec::new(t).unwrap(), &covariates).unwrap();
        assert!(data.times().iter().all(|&x| x <= t), "no observed time may exceed the horizon");
        event_counts.push(data.n_events());
    }
    assert!(
        event_counts.windows(2).all(|w| w[0] <= w[1]),
        "event counts decreased along the horizon sweep: {event_counts:?}"
    );

    // Nothing recorded after the horizon may leak into the dataset:
    // corrupting every post-horizon cycle must change nothing.
    let horizon = CensoringSpec::new(200.0).unwrap();
    let clean = build_survival_dataset(&table, &horizon, &covariates).unwrap();
    let mut corrupted = records;
    for r in &mut corrupted {
        if f64::from(r.cycle) > 200.0 {
            r.sensors = [9.9e9; 21];
            r.op_settings = [-9.9e9; 3];
        }
    }
    let corrupted_table = CmapssTable::from_records(corrupted).unwrap();
    let dirty = build_survival_dataset(&corrupted_table, &horizon, &covariates).unwrap();
    assert_eq!(clean, dirty, "post-horizon records influenced the censored dataset");

    let elapsed = assert_budget(start, Duration::from_secs(5), "criterion 4");
    println!(
        "criterion 4 (censoring mechanics): PASS: events {event_counts:?} along \
         horizons [200, 225, 250], post-horizon corruption invisible ({elapsed:?})"
    );
}

/// Writes a synthetic log for `subset` and runs the full experiment with
/// the default configuration (three horizons, eight models, tolerance
/// 0.05, seed 42).
fn run_default_experiment(subset: CmapssSubset, dir: &Path) -> (ExperimentConfig, ExperimentReport) {
    let data_path = dir.join(format!("{}.txt", subset.as_str()));
    let mut text = Vec::new();
    write_cmapss(&simulate_subset(subset, 42), &mut text).unwrap();
    fs::write(&data_path, text).unwrap();
    let config = ExperimentConfig::new(
        data_path,
        subset,
        dir.join(format!("out_{}", subset.as_str())),
    );
    let report = run_experiment(&config).unwrap();
    (config, report)
}

#[test]
fn criterion_5_end_to_end_desk_scale() {
    let start = Instant::now();
    let dir = TempDir::new().unwrap();

    for subset in [CmapssSubset::Fd001, CmapssSubset::Fd003] {
        let (config, report) = run_default_experiment(subset, dir.path());
        assert_eq!(config.zoo.len(), 8, "the default zoo fields eight model families");
        assert!(!report.partial, "{}: every censoring block must complete", subset.as_str());
        assert_eq!(report.blocks.len(), 3);

        let mut any_plural_set = false;
        for block in &report.blocks {
            let CensorBlock::Completed { censor_time, selection, .. } = block else {
                panic!("{}: block failed", subset.as_str())
            };
            assert!(
                selection.member_c_index_mean > 0.7,
                "{} at horizon {censor_time}: mean member concordance {} is not above 0.7",
                subset.as_str(),
                selection.member_c_index_mean
            );
            if selection.size >= 2 {
                any_plural_set = true;
            }
        }
        assert!(
            any_plural_set,
            "{}: no horizon produced a set with at least two members",
            subset.as_str()
        );

        let reference = published_reference(subset);
        let sizes: Vec<usize> = report
            .blocks
            .iter()
            .filter_map(|b| match b {
                CensorBlock::Completed { selection, .. } => Some(selection.size),
                CensorBlock::Failed { .. } => None,
            })
            .collect();
        let means: Vec<f64> = report
            .blocks
            .iter()
            .filter_map(|b| match b {
                CensorBlock::Completed { selection, .. } => {
                    Some((selection.member_c_index_mean * 1e4).round() / 1e4)
                }
                CensorBlock::Failed { .. } => None,
            })
            .collect();
        println!(
            "  {}: set sizes {sizes:?}, mean member concordance {means:?}; {}: \
             size {}, concordance {} ± {}",
            subset.as_str(),
            reference.label,
            reference.reported_set_size,
            reference.reported_member_c_index_mean,
            reference.reported_member_c_index_sd
        );
    }

    let elapsed = assert_budget(start, Duration::from_secs(300), "criterion 5");
    println!(
        "criterion 5 (end-to-end desk scale): PASS: FD001 and FD003 complete with \
         plural near-optimal sets and mean member concordance above 0.7 ({elapsed:?})"
    );
}

#[test]
fn criterion_6_band_width_grows_with_the_horizon() {
    let start = Instant::now();
    let dir = TempDir::new().unwrap();
    let (_, report) = run_default_experiment(CmapssSubset::Fd001, dir.path());

    let trend = report.width_trend.as_ref().expect("three completed blocks make a trend");
    let points = &trend.mean_width_by_censor_time;
    assert_eq!(points.first().map(|p| p.0), Some(200.0));
    assert_eq!(points.last().map(|p| p.0), Some(250.0));
    let (early, late) = (points.first().unwrap().1, points.last().unwrap().1);
    println!(
        "  FD001 mean band width: {early:.6} at horizon 200, {late:.6} at horizon 250 \
         (full trend {points:?})"
    );
    assert!(
        late >= early,
        "mean band width shrank from {early} at horizon 200 to {late} at horizon 250"
    );

    let elapsed = assert_budget(start, Duration::from_secs(300), "criterion 6");
    println!(
        "criterion 6 (width trend): PASS: mean width {early:.6} at 200 vs {late:.6} \
         at 250 ({elapsed:?})"
    );
}

fn artifact_files(config: &ExperimentConfig, report: &ExperimentReport) -> Vec<PathBuf> {
    let mut files = vec![config.output_dir.join("report.json")];
    for block in &report.blocks {
        if let CensorBlock::Completed { artifacts, .. } = block {
            for name in [
                &artifacts.envelope_csv,
                &artifacts.evaluations_csv,
                &artifacts.models_json,
                &artifacts.band_svg,
            ] {
                files.push(config.output_dir.join(name));
            }
        }
    }
    files
}

#[test]
fn criterion_7_repeated_runs_are_byte_identical() {
    let start = Instant::now();
    let dir = TempDir::new().unwrap();

    let data_path = dir.path().join("fd001.txt");
    let mut text = Vec::new();
    write_cmapss(&simulate_subset(CmapssSubset::Fd001, 42), &mut text).unwrap();
    fs::write(&data_path, text).unwrap();

    let mut config =
        ExperimentConfig::new(data_path, CmapssSubset::Fd001, dir.path().join("out"));
    config.censor_times = vec![200.0, 225.0];
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let invoke = || {
        let output = Command::new(env!("CARGO_BIN_EXE_survband"))
            .args(["run", "--config"])
            .arg(&config_path)
            .output()
            .expect("binary should spawn");
        assert!(
            output.status.success(),
            "run failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };

    invoke();
    let report = ExperimentReport::load(&config.output_dir.join("report.json")).unwrap();
    let files = artifact_files(&config, &report);
    assert!(files.len() > 1, "expected block artifacts beyond the report");
    let first_pass: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();

    invoke();
    let mut identical = 0usize;
    for (file, before) in files.iter().zip(&first_pass) {
        let after = fs::read(file).unwrap();
        assert_eq!(
            &after,
            before,
            "{} differs between two identical runs",
            file.display()
        );
        identical += 1;
    }

    let elapsed = assert_budget(start, Duration::from_secs(300), "criterion 7");
    println!(
        "criterion 7 (determinism): PASS: {identical} artifact files byte-identical \
         across two runs ({elapsed:?})"
    );
}
