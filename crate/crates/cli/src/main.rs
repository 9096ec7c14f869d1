//! `survband`: train a survival model zoo on run-to-failure data, keep
//! every model within epsilon of the best, and trace the band their
//! predictions span over time.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use survband_cli::compare::{compare_reports, format_table};
use survband_cli::config::ExperimentConfig;
use survband_cli::pipeline::{ingest_to_csv, run_experiment};
use survband_cli::plot::plot_csv_file;
use survband_cli::report::{CensorBlock, ExperimentReport};
use survband_cli::{CliError, Result};
use survband_core::ingest::CovariateSpec;
use survband_core::simulate::{simulate_subset, write_cmapss};
use survband_core::CmapssSubset;

const EXIT_OK: u8 = 0;
const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "survband",
    version,
    about = "Survival model zoos, near-optimal model sets, and the prediction bands they span"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a 26-column run-to-failure log into the canonical
    /// time-to-event CSV.
    Ingest {
        /// Raw log file.
        #[arg(long)]
        data: PathBuf,
        /// Subset name (FD001..FD004), echoed in the summary.
        #[arg(long)]
        subset: CmapssSubsetArg,
        /// Administrative censoring horizon; omit to observe every failure.
        #[arg(long)]
        censor_time: Option<f64>,
        /// Cycles averaged into each unit's covariates.
        #[arg(long, default_value_t = 30)]
        covariate_window: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full experiment described by a JSON config.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-render a saved envelope CSV as an SVG band plot.
    Plot {
        /// Envelope CSV (time,lower,reference,upper).
        #[arg(long)]
        envelope: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize censoring horizons across one or more reports.
    Compare {
        /// Report JSON files from `run`.
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
    },
    /// Generate a deterministic synthetic run-to-failure log in the
    /// standard 26-column layout.
    Simulate {
        /// Subset profile to generate (FD001..FD004).
        #[arg(long)]
        subset: CmapssSubsetArg,
        /// Generator seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output log path.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Thin clap-parseable wrapper so `--subset fd001` and `--subset FD001`
/// both work.
#[derive(Clone)]
struct CmapssSubsetArg(CmapssSubset);

impl std::str::FromStr for CmapssSubsetArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse::<CmapssSubset>().map(CmapssSubsetArg).map_err(|e| e.to_string())
    }
}

fn configure_threads() -> Result<()> {
    match std::env::var("RASHOMON_SURV_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                CliError::Config(format!(
                    "RASHOMON_SURV_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
            if n == 0 {
                return Err(CliError::Config(
                    "RASHOMON_SURV_THREADS must be at least 1".into(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))
        }
    }
}

fn cmd_ingest(
    data: &PathBuf,
    subset: CmapssSubset,
    censor_time: Option<f64>,
    covariate_window: usize,
    out: Option<&PathBuf>,
) -> Result<()> {
    let covariates = CovariateSpec::WindowMean { window_length: covariate_window };
    let (csv, summary) = ingest_to_csv(data, censor_time, &covariates)?;
    match out {
        Some(path) => fs::write(path, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    eprintln!(
        "{subset}: {} units over {} log records, {} events{}",
        summary.n_units,
        summary.n_records,
        summary.n_events,
        if summary.dropped_constant_columns.is_empty() {
            String::new()
        } else {
            format!("; dropped constant columns: {}", summary.dropped_constant_columns.join(", "))
        }
    );
    Ok(())
}

fn print_run_summary(report: &ExperimentReport) {
    for block in &report.blocks {
        match block {
            CensorBlock::Completed { censor_time, selection, envelope_stats, .. } => {
                println!(
                    "t = {censor_time}: {} of {} models selected (best {} at loss {:.4}), \
                     member c-index {:.4} +/- {:.4}, mean band width {:.4}",
                    selection.size,
                    report.config.zoo.len(),
                    selection.best_model_id,
                    selection.best_loss,
                    selection.member_c_index_mean,
                    selection.member_c_index_sd,
                    envelope_stats.mean_width
                );
            }
            CensorBlock::Failed { censor_time, error } => {
                println!("t = {censor_time}: FAILED ({error})");
            }
        }
    }
    if let Some(trend) = &report.width_trend {
        let widths: Vec<String> = trend
            .mean_width_by_censor_time
            .iter()
            .map(|(t, w)| format!("{t}:{w:.4}"))
            .collect();
        println!(
            "mean width by censoring horizon: {} ({})",
            widths.join(" "),
            if trend.non_decreasing { "non-decreasing" } else { "not monotone" }
        );
    }
    println!("report: {}", report.config.output_dir.join("report.json").display());
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Ingest { data, subset, censor_time, covariate_window, out } => {
            cmd_ingest(&data, subset.0, censor_time, covariate_window, out.as_ref())?;
            Ok(false)
        }
        Command::Run { config, output_dir, seed } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let report = run_experiment(&config)?;
            print_run_summary(&report);
            Ok(report.partial)
        }
        Command::Plot { envelope, out } => {
            plot_csv_file(&envelope, &out)?;
            eprintln!("wrote {}", out.display());
            Ok(false)
        }
        Command::Compare { reports } => {
            let loaded = reports
                .iter()
                .map(|path| ExperimentReport::load(path))
                .collect::<Result<Vec<ExperimentReport>>>()?;
            let rows = compare_reports(&loaded)?;
            print!("{}", format_table(&rows));
            let skipped: usize = loaded
                .iter()
                .flat_map(|r| &r.blocks)
                .filter(|b| !b.is_completed())
                .count();
            if skipped > 0 {
                eprintln!("note: {skipped} failed block(s) were skipped");
            }
            Ok(false)
        }
        Command::Simulate { subset, seed, out } => {
            let records = simulate_subset(subset.0, seed);
            let mut buffer = Vec::new();
            write_cmapss(&records, &mut buffer)?;
            fs::write(&out, buffer)?;
            eprintln!("wrote {} records of {} to {}", records.len(), subset.0, out.display());
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match run(cli.command) {
        Ok(false) => ExitCode::from(EXIT_OK),
        Ok(true) => {
            eprintln!("some censoring horizons failed; see the report for details");
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
