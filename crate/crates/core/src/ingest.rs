//! Ingestion of run-to-failure sensor logs in the 26-column turbofan
//! format: unit number, cycle index, three operational settings and 21
//! sensor channels per line.
//!
//! The pipeline is: parse the raw log, drop uninformative constant
//! columns, then collapse each unit's trajectory into one time-to-event
//! row under an administrative censoring time. Covariates are summarized
//! from early cycles only, so nothing observed after the censoring time
//! can leak into the features.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{TimeToEventDataset, TimeToEventRow};
use crate::error::{Error, Result};

pub const OP_SETTING_COUNT: usize = 3;
pub const SENSOR_COUNT: usize = 21;
/// unit, cycle, 3 op settings, 21 sensors.
pub const COLUMN_COUNT: usize = 2 + OP_SETTING_COUNT + SENSOR_COUNT;

/// One line of a turbofan log.
#[derive(Debug, Clone, PartialEq)]
pub struct CmapssRecord {
    pub unit: u32,
    pub cycle: u32,
    pub op_settings: [f64; OP_SETTING_COUNT],
    pub sensors: [f64; SENSOR_COUNT],
}

impl CmapssRecord {
    /// Value of the canonical feature column `index` (0..24): the three
    /// op settings first, then the 21 sensors.
    pub fn feature(&self, index: usize) -> f64 {
        if index < OP_SETTING_COUNT {
            self.op_settings[index]
        } else {
            self.sensors[index - OP_SETTING_COUNT]
        }
    }
}

/// Canonical names for the 24 feature columns.
pub fn all_feature_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=OP_SETTING_COUNT).map(|i| format!("op_set_{i}")).collect();
    names.extend((1..=SENSOR_COUNT).map(|i| format!("sensor_{i}")));
    names
}

/// Parses a whitespace-separated turbofan log. Blank lines are skipped;
/// any other malformed line fails with its 1-based line number.
pub fn parse_cmapss<R: BufRead>(reader: R) -> Result<Vec<CmapssRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != COLUMN_COUNT {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {COLUMN_COUNT} columns, found {}", tokens.len()),
            });
        }
        let int_field = |tok: &str, name: &str| -> Result<u32> {
            tok.parse::<u32>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name} {tok:?} is not a positive integer"),
            })
        };
        let float_field = |tok: &str, name: &str| -> Result<f64> {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name} {tok:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: line_no, message: format!("{name} {tok:?} is not finite") });
            }
            Ok(v)
        };
        let unit = int_field(tokens[0], "unit number")?;
        let cycle = int_field(tokens[1], "cycle index")?;
        let mut op_settings = [0.0; OP_SETTING_COUNT];
        for (j, slot) in op_settings.iter_mut().enumerate() {
            *slot = float_field(tokens[2 + j], &format!("op_set_{}", j + 1))?;
        }
        let mut sensors = [0.0; SENSOR_COUNT];
        for (j, slot) in sensors.iter_mut().enumerate() {
            *slot = float_field(tokens[2 + OP_SETTING_COUNT + j], &format!("sensor_{}", j + 1))?;
        }
        records.push(CmapssRecord { unit, cycle, op_settings, sensors });
    }
    Ok(records)
}

/// A parsed log with a live subset of feature columns. Units keep their
/// file order; each unit's cycles are validated to run 1, 2, 3, ...
/// without gaps.
#[derive(Debug, Clone)]
pub struct CmapssTable {
    records: Vec<CmapssRecord>,
    /// Indices into the canonical 24 feature columns that are still live.
    feature_indices: Vec<usize>,
    /// Unit numbers in first-appearance order.
    unit_order: Vec<u32>,
    /// unit number -> record index range (units are contiguous runs).
    unit_spans: HashMap<u32, (usize, usize)>,
}

impl CmapssTable {
    pub fn from_records(records: Vec<CmapssRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidDataset("log contains no records".into()));
        }
        let mut unit_order = Vec::new();
        let mut unit_spans: HashMap<u32, (usize, usize)> = HashMap::new();
        let mut i = 0;
        while i < records.len() {
            let unit = records[i].unit;
            if unit_spans.contains_key(&unit) {
                return Err(Error::InvalidDataset(format!(
                    "records for unit {unit} are not contiguous"
                )));
            }
            let start = i;
            while i < records.len() && records[i].unit == unit {
                let expected = (i - start + 1) as u32;
                if records[i].cycle != expected {
                    return Err(Error::InvalidDataset(format!(
                        "unit {unit} has cycle {} where {expected} was expected; cycles must be consecutive from 1",
                        records[i].cycle
                    )));
                }
                i += 1;
            }
            unit_order.push(unit);
            unit_spans.insert(unit, (start, i));
        }
        Ok(Self { records, feature_indices: (0..all_feature_names().len()).collect(), unit_order, unit_spans })
    }

    pub fn records(&self) -> &[CmapssRecord] {
        &self.records
    }

    pub fn n_units(&self) -> usize {
        self.unit_order.len()
    }

    pub fn unit_numbers(&self) -> &[u32] {
        &self.unit_order
    }

    pub fn unit_records(&self, unit: u32) -> &[CmapssRecord] {
        let (start, end) = self.unit_spans[&unit];
        &self.records[start..end]
    }

    /// Names of the live feature columns, in canonical order.
    pub fn feature_names(&self) -> Vec<String> {
        let all = all_feature_names();
        self.feature_indices.iter().map(|&i| all[i].clone()).collect()
    }

    /// Live feature values of one record, in canonical column order.
    pub fn feature_vector(&self, record: &CmapssRecord) -> Vec<f64> {
        self.feature_indices.iter().map(|&i| record.feature(i)).collect()
    }

    /// Removes every column that does not take at least two distinct
    /// values across the whole log. Returns the reduced table and the
    /// dropped column names; errors if nothing would remain.
    pub fn drop_constant_columns(mut self) -> Result<(CmapssTable, Vec<String>)> {
        let all = all_feature_names();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for &idx in &self.feature_indices {
            let first = self.records[0].feature(idx);
            let varies = self.records.iter().any(|r| r.feature(idx) != first);
            if varies {
                kept.push(idx);
            } else {
                dropped.push(all[idx].clone());
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidDataset(
                "every feature column is constant; nothing remains to model".into(),
            ));
        }
        self.feature_indices = kept;
        Ok((self, dropped))
    }
}

/// Administrative censoring horizon: every unit still running at
/// `censor_time` is recorded as censored there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringSpec {
    pub censor_time: f64,
}

impl CensoringSpec {
    pub fn new(censor_time: f64) -> Result<Self> {
        if !censor_time.is_finite() || censor_time < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "censor_time must be a finite value >= 1 (the first cycle), got {censor_time}"
            )));
        }
        Ok(Self { censor_time })
    }

    /// No administrative censoring: every failure is observed.
    pub fn uncensored() -> Self {
        Self { censor_time: f64::INFINITY }
    }
}

/// How a unit's early trajectory is collapsed into one covariate vector.
/// Only cycles at or before min(failure, censor_time) are ever touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum CovariateSpec {
    /// Values at cycle 1.
    FirstCycle,
    /// Mean over the first `window_length` observable cycles; shorter
    /// histories fall back to the mean of whatever is available.
    WindowMean { window_length: usize },
}

impl Default for CovariateSpec {
    fn default() -> Self {
        CovariateSpec::WindowMean { window_length: 30 }
    }
}

/// Collapses each unit into a `(time, event, covariates)` row.
///
/// A unit failing at exactly the censoring time counts as an observed
/// event. Covariates are computed strictly from cycles at or before
/// min(failure time, censor_time).
pub fn build_survival_dataset(
    table: &CmapssTable,
    censoring: &CensoringSpec,
    covariates: &CovariateSpec,
) -> Result<TimeToEventDataset> {
    if let CovariateSpec::WindowMean { window_length: 0 } = covariates {
        return Err(Error::InvalidArgument("window_length must be at least 1".into()));
    }
    if !(censoring.censor_time >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "censor_time {} lies before the first cycle; no unit would be observable",
            censoring.censor_time
        )));
    }
    let p = table.feature_names().len();
    let mut rows = Vec::with_capacity(table.n_units());
    for &unit in table.unit_numbers() {
        let trajectory = table.unit_records(unit);
        let failure_time = trajectory.len() as f64;
        let (time, event) = if failure_time <= censoring.censor_time {
            (failure_time, true)
        } else {
            (censoring.censor_time, false)
        };
        // Cycles observable before the outcome; consecutive numbering
        // makes this a prefix of the trajectory.
        let observable = trajectory
            .iter()
            .take_while(|r| (r.cycle as f64) <= failure_time.min(censoring.censor_time))
            .count();
        debug_assert!(observable >= 1);
        let span = match covariates {
            CovariateSpec::FirstCycle => 1,
            CovariateSpec::WindowMean { window_length } => observable.min(*window_length),
        };
        let mut acc = vec![0.0; p];
        for record in &trajectory[..span] {
            for (a, v) in acc.iter_mut().zip(table.feature_vector(record)) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= span as f64;
        }
        rows.push(TimeToEventRow { unit_id: unit.to_string(), time, event, covariates: acc });
    }
    TimeToEventDataset::new(rows, table.feature_names())
}

/// Unit-level split: shuffles units with a seeded generator and assigns
/// round(n * train_fraction) of them (clamped so both sides stay
/// non-empty) to the training side. Row order within each side follows
/// the input dataset, so the split is reproducible byte for byte.
pub fn split_train_test(
    data: &TimeToEventDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TimeToEventDataset, TimeToEventDataset)> {
    if !train_fraction.is_finite() || train_fraction <= 0.0 || train_fraction >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = data.n_units();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} unit(s) into two non-empty sides")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let n_train = ((n as f64) * train_fraction).round().clamp(1.0, (n - 1) as f64) as usize;
    let mut train_idx = perm[..n_train].to_vec();
    let mut test_idx = perm[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.select(&train_idx)?, data.select(&test_idx)?))
}

/// Writes the canonical dataset CSV: `unit_id,time,event,<features...>`,
/// event encoded as 1/0, floats in shortest round-trip form.
pub fn write_dataset_csv<W: Write>(data: &TimeToEventDataset, mut out: W) -> Result<()> {
    write!(out, "unit_id,time,event")?;
    for name in data.feature_names() {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for row in data.rows() {
        write!(out, "{},{},{}", row.unit_id, row.time, if row.event { 1 } else { 0 })?;
        for v in &row.covariates {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a canonical dataset CSV back. Errors carry 1-based line numbers.
pub fn read_dataset_csv<R: BufRead>(reader: R) -> Result<TimeToEventDataset> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "missing header line".into() })?;
    let header = header?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "unit_id" || cols[1] != "time" || cols[2] != "event" {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with unit_id,time,event".into(),
        });
    }
    let feature_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let time: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("time {:?} is not a number", fields[1]) })?;
        let event = match fields[2] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse { line: line_no, message: format!("event {other:?} must be 0 or 1") })
            }
        };
        let covariates = fields[3..]
            .iter()
            .map(|f| {
                f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("covariate {f:?} is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(TimeToEventRow { unit_id: fields[0].to_string(), time, event, covariates });
    }
    TimeToEventDataset::new(rows, feature_names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A tiny synthetic log: `units` lists (unit number, lifetime); sensor_1
    /// is constant, sensor_2 grows linearly, op_set_3 is constant.
    fn toy_log(units: &[(u32, u32)]) -> Vec<CmapssRecord> {
        let mut records = Vec::new();
        for &(unit, life) in units {
            for cycle in 1..=life {
                let mut sensors = [0.0; SENSOR_COUNT];
                sensors[0] = 518.67;
                sensors[1] = 640.0 + cycle as f64;
                for (j, s) in sensors.iter_mut().enumerate().skip(2) {
                    *s = j as f64 + (unit * cycle) as f64 * 0.01;
                }
                records.push(CmapssRecord {
                    unit,
                    cycle,
                    op_settings: [0.001 * cycle as f64, -0.002, 100.0],
                    sensors,
                });
            }
        }
        records
    }

    fn to_text(records: &[CmapssRecord]) -> String {
        let mut s = String::new();
        for r in records {
            s.push_str(&format!("{} {}", r.unit, r.cycle));
            for v in r.op_settings.iter().chain(r.sensors.iter()) {
                s.push_str(&format!(" {v}"));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn parse_round_trips_the_toy_log() {
        let records = toy_log(&[(1, 3), (2, 2)]);
        let parsed = parse_cmapss(to_text(&records).as_bytes()).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let good = to_text(&toy_log(&[(1, 2)]));
        let mut text = good.clone();
        text.push_str("3 1 0.0 0.0\n");
        match parse_cmapss(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let bad_token = good.replacen("518.67", "oops", 1);
        match parse_cmapss(bad_token.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_accepts_empty_input_and_blank_lines() {
        assert!(parse_cmapss("".as_bytes()).unwrap().is_empty());
        let text = format!("\n{}\n\n", to_text(&toy_log(&[(1, 1)])));
        assert_eq!(parse_cmapss(text.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn table_rejects_gapped_cycles() {
        let mut records = toy_log(&[(1, 3)]);
        records[2].cycle = 4;
        assert!(matches!(CmapssTable::from_records(records), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn constant_columns_are_dropped_by_name() {
        let table = CmapssTable::from_records(toy_log(&[(1, 4), (2, 5)])).unwrap();
        let (reduced, dropped) = table.drop_constant_columns().unwrap();
        assert_eq!(dropped, vec!["op_set_2".to_string(), "op_set_3".to_string(), "sensor_1".to_string()]);
        assert_eq!(reduced.feature_names().len(), 24 - 3);
        assert!(!reduced.feature_names().contains(&"sensor_1".to_string()));
    }

    #[test]
    fn failure_at_the_censor_time_is_an_event() {
        let table = CmapssTable::from_records(toy_log(&[(1, 5), (2, 8)])).unwrap();
        let censoring = CensoringSpec::new(5.0).unwrap();
        let data = build_survival_dataset(&table, &censoring, &CovariateSpec::FirstCycle).unwrap();
        assert_eq!(data.rows()[0].time, 5.0);
        assert!(data.rows()[0].event);
        assert_eq!(data.rows()[1].time, 5.0);
        assert!(!data.rows()[1].event);
    }

    #[test]
    fn window_mean_falls_back_to_short_histories() {
        let table = CmapssTable::from_records(toy_log(&[(1, 3), (2, 10)])).unwrap();
        let censoring = CensoringSpec::uncensored();
        let spec = CovariateSpec::WindowMean { window_length: 5 };
        let data = build_survival_dataset(&table, &censoring, &spec).unwrap();
        let names = table.feature_names();
        let s2 = names.iter().position(|n| n == "sensor_2").unwrap();
        // Unit 1 only has 3 cycles: mean of 641, 642, 643.
        assert_relative_eq!(data.rows()[0].covariates[s2], 642.0);
        // Unit 2 has >= 5 cycles: mean of 641..=645.
        assert_relative_eq!(data.rows()[1].covariates[s2], 643.0);
    }

    #[test]
    fn covariates_ignore_cycles_after_the_censor_time() {
        // Unit 2 fails before the horizon so the dataset keeps at least
        // one event; unit 1 is censored and carries the hidden tail.
        let mut records = toy_log(&[(1, 10), (2, 3)]);
        let censoring = CensoringSpec::new(4.0).unwrap();
        let spec = CovariateSpec::WindowMean { window_length: 8 };
        let table = CmapssTable::from_records(records.clone()).unwrap();
        let before = build_survival_dataset(&table, &censoring, &spec).unwrap();
        // Corrupt everything the censoring horizon should hide.
        for r in records.iter_mut().filter(|r| r.cycle > 4) {
            r.sensors = [9e9; SENSOR_COUNT];
            r.op_settings = [9e9; OP_SETTING_COUNT];
        }
        let table = CmapssTable::from_records(records).unwrap();
        let after = build_survival_dataset(&table, &censoring, &spec).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn split_is_deterministic_and_partitions_units() {
        let table = CmapssTable::from_records(toy_log(&(1..=10).map(|u| (u, 4 + u)).collect::<Vec<_>>())).unwrap();
        let data = build_survival_dataset(&table, &CensoringSpec::uncensored(), &CovariateSpec::FirstCycle).unwrap();
        let (tr1, te1) = split_train_test(&data, 0.8, 7).unwrap();
        let (tr2, te2) = split_train_test(&data, 0.8, 7).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        assert_eq!(tr1.n_units(), 8);
        assert_eq!(te1.n_units(), 2);
        let mut ids: Vec<&str> = tr1.rows().iter().chain(te1.rows()).map(|r| r.unit_id.as_str()).collect();
        ids.sort_unstable();
        let mut expected: Vec<String> = (1..=10).map(|u| u.to_string()).collect();
        expected.sort();
        assert_eq!(ids, expected.iter().map(|s| s.as_str()).collect::<Vec<_>>());

        let (tr3, _) = split_train_test(&data, 0.8, 8).unwrap();
        assert_ne!(tr1.rows(), tr3.rows(), "different seeds should give different splits");
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let table = CmapssTable::from_records(toy_log(&[(1, 3), (2, 4)])).unwrap();
        let data = build_survival_dataset(&table, &CensoringSpec::uncensored(), &CovariateSpec::FirstCycle).unwrap();
        for f in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(split_train_test(&data, f, 1).is_err(), "fraction {f} should be rejected");
        }
    }

    #[test]
    fn dataset_csv_round_trips() {
        let table = CmapssTable::from_records(toy_log(&[(1, 6), (2, 9)])).unwrap();
        let censoring = CensoringSpec::new(7.0).unwrap();
        let data = build_survival_dataset(&table, &censoring, &CovariateSpec::default()).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf).unwrap();
        let back = read_dataset_csv(buf.as_slice()).unwrap();
        assert_eq!(data, back);
    }
}
