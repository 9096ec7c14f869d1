//! Report schema and artifact serialization.
//!
//! A report is one JSON document: tool provenance, the exact config,
//! a data summary, one block per censoring horizon, and a cross-horizon
//! width trend. Reports carry no timestamps, so identical runs produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use survband_core::eval::EvaluationRecord;
use survband_core::rashomon::{EnvelopeStats, NearOptimalSet, SurvivalEnvelope};
use survband_core::{CmapssSubset, SurvivalCurve};

use crate::config::ExperimentConfig;
use crate::{CliError, Result};

pub const TOOL_NAME: &str = "survband";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REFERENCE_LABEL: &str = "reference (not reproducible)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self { name: TOOL_NAME.to_string(), version: TOOL_VERSION.to_string() }
    }
}

/// Benchmark-subset summary statistics published by earlier work on
/// near-optimal survival model sets. That work used a different, larger
/// model zoo with unpublished seeds and covariate construction, so these
/// numbers are context for readers of a report, never a target this tool
/// is expected to match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedReference {
    /// Always [`REFERENCE_LABEL`]: these values are non-binding context.
    pub label: String,
    pub subset: String,
    pub reported_set_size: usize,
    pub reported_member_c_index_mean: f64,
    pub reported_member_c_index_sd: f64,
}

pub fn published_reference(subset: CmapssSubset) -> PublishedReference {
    let (size, mean, sd) = match subset {
        CmapssSubset::Fd001 => (5, 0.8259, 0.0204),
        CmapssSubset::Fd002 => (4, 0.7189, 0.0124),
        CmapssSubset::Fd003 => (4, 0.8707, 0.0181),
        CmapssSubset::Fd004 => (8, 0.8027, 0.0146),
    };
    PublishedReference {
        label: REFERENCE_LABEL.to_string(),
        subset: subset.as_str().to_string(),
        reported_set_size: size,
        reported_member_c_index_mean: mean,
        reported_member_c_index_sd: sd,
    }
}

/// What the ingested log looked like before censoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n_units: usize,
    pub n_records: usize,
    pub dropped_constant_columns: Vec<String>,
    pub feature_names: Vec<String>,
}

/// The selected near-optimal set, summarized for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub epsilon: f64,
    pub loss: String,
    pub size: usize,
    pub best_model_id: String,
    pub best_loss: f64,
    pub member_ids: Vec<String>,
    /// Mean of member C-indexes on the held-out split.
    pub member_c_index_mean: f64,
    /// Population standard deviation of member C-indexes.
    pub member_c_index_sd: f64,
}

impl SelectionSummary {
    pub fn build(
        set: &NearOptimalSet,
        evaluations: &[EvaluationRecord],
    ) -> Result<SelectionSummary> {
        let member_cs: Vec<f64> = set
            .members
            .iter()
            .map(|m| {
                evaluations
                    .iter()
                    .find(|r| r.model_id == m.model_id)
                    .map(|r| r.c_index)
                    .ok_or_else(|| {
                        CliError::Input(format!("member {:?} has no evaluation record", m.model_id))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let n = member_cs.len() as f64;
        let mean = member_cs.iter().sum::<f64>() / n;
        let var = member_cs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
        Ok(SelectionSummary {
            epsilon: set.epsilon,
            loss: set.loss_name.clone(),
            size: set.len(),
            best_model_id: set.best_model_id.clone(),
            best_loss: set.best_loss,
            member_ids: set.members.iter().map(|m| m.model_id.clone()).collect(),
            member_c_index_mean: mean,
            member_c_index_sd: var.sqrt(),
        })
    }
}

/// File names (relative to the output directory) written for one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockArtifacts {
    pub envelope_csv: String,
    pub evaluations_csv: String,
    pub models_json: String,
    pub band_svg: String,
}

/// One censoring horizon's results, or the reason it failed. A failure
/// in one block never aborts the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CensorBlock {
    Completed {
        censor_time: f64,
        n_train_units: usize,
        n_test_units: usize,
        n_events: usize,
        evaluations: Vec<EvaluationRecord>,
        selection: SelectionSummary,
        envelope_stats: EnvelopeStats,
        artifacts: BlockArtifacts,
    },
    Failed {
        censor_time: f64,
        error: String,
    },
}

impl CensorBlock {
    pub fn censor_time(&self) -> f64 {
        match self {
            CensorBlock::Completed { censor_time, .. } | CensorBlock::Failed { censor_time, .. } => {
                *censor_time
            }
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, CensorBlock::Completed { .. })
    }
}

/// Mean band width per censoring horizon, in horizon order, with the
/// headline monotonicity check: did the band widen (or hold) as the
/// horizon grew? Wider bands at later horizons mean model disagreement
/// grows where fewer failures remain observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthTrend {
    /// (censor_time, mean band width) for each completed block.
    pub mean_width_by_censor_time: Vec<(f64, f64)>,
    pub non_decreasing: bool,
}

impl WidthTrend {
    /// Built from the completed blocks; None when fewer than two
    /// completed, since a trend needs at least two points.
    pub fn from_blocks(blocks: &[CensorBlock]) -> Option<WidthTrend> {
        let mut points: Vec<(f64, f64)> = blocks
            .iter()
            .filter_map(|b| match b {
                CensorBlock::Completed { censor_time, envelope_stats, .. } => {
                    Some((*censor_time, envelope_stats.mean_width))
                }
                CensorBlock::Failed { .. } => None,
            })
            .collect();
        if points.len() < 2 {
            return None;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let non_decreasing = points.windows(2).all(|w| w[0].1 <= w[1].1);
        Some(WidthTrend { mean_width_by_censor_time: points, non_decreasing })
    }
}

/// The complete experiment record: everything needed to read, audit or
/// re-render a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool: ToolInfo,
    pub config: ExperimentConfig,
    pub data: DataSummary,
    pub published_reference: PublishedReference,
    pub blocks: Vec<CensorBlock>,
    pub width_trend: Option<WidthTrend>,
    /// True when at least one block failed.
    pub partial: bool,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn load(path: &Path) -> Result<ExperimentReport> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read report {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("cannot parse report {}: {e}", path.display())))
    }
}

/// File-name tag for a censoring horizon: integral horizons stay bare
/// ("200"), fractional ones swap the dot for a 'p' ("212p5").
pub fn time_tag(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t}").replace('.', "p")
    }
}

/// Envelope CSV: `time,lower,reference,upper`, one row per grid point,
/// floats in shortest round-trip form.
pub fn write_envelope_csv<W: Write>(envelope: &SurvivalEnvelope, mut out: W) -> Result<()> {
    writeln!(out, "time,lower,reference,upper")?;
    for (i, &t) in envelope.grid.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            t,
            envelope.lower[i],
            envelope.reference.probs()[i],
            envelope.upper[i]
        )?;
    }
    Ok(())
}

/// Parses an envelope CSV back into (grid, lower, reference, upper).
pub fn read_envelope_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input("envelope CSV is empty".into()))?
        .1;
    if header.trim() != "time,lower,reference,upper" {
        return Err(CliError::Input(format!(
            "envelope CSV header must be \"time,lower,reference,upper\", got {header:?}"
        )));
    }
    let mut grid = Vec::new();
    let mut lower = Vec::new();
    let mut reference = Vec::new();
    let mut upper = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Input(format!(
                "envelope CSV line {line_no}: expected 4 fields, found {}",
                fields.len()
            )));
        }
        let mut parsed = [0.0f64; 4];
        for (slot, field) in parsed.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                CliError::Input(format!("envelope CSV line {line_no}: {field:?} is not a number"))
            })?;
        }
        grid.push(parsed[0]);
        lower.push(parsed[1]);
        reference.push(parsed[2]);
        upper.push(parsed[3]);
    }
    if grid.is_empty() {
        return Err(CliError::Input("envelope CSV has no data rows".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Input("envelope CSV times must be strictly increasing".into()));
    }
    for i in 0..grid.len() {
        if !(lower[i] <= reference[i] && reference[i] <= upper[i]) {
            return Err(CliError::Input(format!(
                "envelope CSV row at t = {}: needs lower <= reference <= upper",
                grid[i]
            )));
        }
    }
    Ok((grid, lower, reference, upper))
}

/// Evaluation CSV: one row per model, Brier columns in horizon order.
pub fn write_evaluations_csv<W: Write>(
    records: &[EvaluationRecord],
    horizons: &[f64],
    mut out: W,
) -> Result<()> {
    write!(out, "model_id,c_index,n_comparable_pairs,integrated_brier")?;
    for &t in horizons {
        write!(out, ",brier_at_{}", time_tag(t))?;
    }
    writeln!(out)?;
    for record in records {
        write!(
            out,
            "{},{},{},{}",
            record.model_id, record.c_index, record.n_comparable_pairs, record.integrated_brier
        )?;
        for &(_, b) in &record.brier_at {
            write!(out, ",{b}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Single-curve CSV: `time,prob`, one row per grid point.
pub fn write_curve_csv<W: Write>(curve: &SurvivalCurve, mut out: W) -> Result<()> {
    writeln!(out, "time,prob")?;
    for (t, p) in curve.times().iter().zip(curve.probs()) {
        writeln!(out, "{t},{p}")?;
    }
    Ok(())
}
