//! Cross-report comparison: one table row per completed censoring
//! block, so the effect of the censoring horizon on set size and band
//! width reads off directly.

use serde::{Deserialize, Serialize};

use crate::report::{CensorBlock, ExperimentReport};
use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub censor_time: f64,
    pub set_size: usize,
    pub mean_width: f64,
    pub max_width: f64,
    /// (probe time, width) pairs echoed from the block's stats.
    pub width_at: Vec<(f64, f64)>,
}

/// Reports must describe the same experiment apart from the censoring
/// horizons: same subset, selection settings, split, seed and zoo.
fn check_comparable(reports: &[ExperimentReport]) -> Result<()> {
    let first = &reports[0].config;
    for report in &reports[1..] {
        let config = &report.config;
        let mismatch = |what: &str| {
            Err(CliError::Input(format!(
                "reports are not comparable: {what} differs between runs"
            )))
        };
        if config.subset != first.subset {
            return mismatch("subset");
        }
        if config.epsilon != first.epsilon {
            return mismatch("epsilon");
        }
        if config.loss != first.loss {
            return mismatch("loss");
        }
        if config.train_fraction != first.train_fraction {
            return mismatch("train_fraction");
        }
        if config.seed != first.seed {
            return mismatch("seed");
        }
        if config.covariate_spec != first.covariate_spec {
            return mismatch("covariate_spec");
        }
        if config.zoo != first.zoo {
            return mismatch("zoo");
        }
        if config.grid_step != first.grid_step {
            return mismatch("grid_step");
        }
    }
    Ok(())
}

/// Flattens every completed block of every report into rows ordered by
/// censoring time. Failed blocks contribute nothing.
pub fn compare_reports(reports: &[ExperimentReport]) -> Result<Vec<ComparisonRow>> {
    if reports.is_empty() {
        return Err(CliError::Input("no reports to compare".into()));
    }
    check_comparable(reports)?;
    let mut rows = Vec::new();
    for report in reports {
        for block in &report.blocks {
            if let CensorBlock::Completed { censor_time, selection, envelope_stats, .. } = block {
                rows.push(ComparisonRow {
                    censor_time: *censor_time,
                    set_size: selection.size,
                    mean_width: envelope_stats.mean_width,
                    max_width: envelope_stats.max_width,
                    width_at: envelope_stats.width_at.clone(),
                });
            }
        }
    }
    rows.sort_by(|a, b| a.censor_time.total_cmp(&b.censor_time));
    Ok(rows)
}

/// Plain-text table, one row per censoring horizon.
pub fn format_table(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("censor_time  set_size  mean_width  max_width  width_at_probes\n");
    for row in rows {
        let probes = if row.width_at.is_empty() {
            "-".to_string()
        } else {
            row.width_at
                .iter()
                .map(|(t, w)| format!("{t}:{w:.4}"))
                .collect::<Vec<String>>()
                .join(" ")
        };
        out.push_str(&format!(
            "{:<11}  {:<8}  {:<10.4}  {:<9.4}  {}\n",
            row.censor_time, row.set_size, row.mean_width, row.max_width, probes
        ));
    }
    out
}
