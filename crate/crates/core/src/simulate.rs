//! Deterministic generators for demonstration and test data.
//!
//! The turbofan generator produces logs in the standard 26-column format:
//! per-unit Weibull lifetimes, monotone degradation ramps on the
//! informative sensor channels and exactly constant columns where the
//! real subsets have them, so the ingest pipeline exercises the same
//! paths (constant-column removal, censoring, windowed covariates) it
//! would on the published benchmark files. The numbers themselves are
//! synthetic; nothing here reproduces the original recordings.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{TimeToEventDataset, TimeToEventRow};
use crate::error::{Error, Result};
use crate::ingest::{CmapssRecord, SENSOR_COUNT};

/// The four turbofan benchmark subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CmapssSubset {
    Fd001,
    Fd002,
    Fd003,
    Fd004,
}

impl CmapssSubset {
    pub const ALL: [CmapssSubset; 4] =
        [CmapssSubset::Fd001, CmapssSubset::Fd002, CmapssSubset::Fd003, CmapssSubset::Fd004];

    pub fn as_str(&self) -> &'static str {
        match self {
            CmapssSubset::Fd001 => "FD001",
            CmapssSubset::Fd002 => "FD002",
            CmapssSubset::Fd003 => "FD003",
            CmapssSubset::Fd004 => "FD004",
        }
    }
}

impl fmt::Display for CmapssSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CmapssSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FD001" => Ok(CmapssSubset::Fd001),
            "FD002" => Ok(CmapssSubset::Fd002),
            "FD003" => Ok(CmapssSubset::Fd003),
            "FD004" => Ok(CmapssSubset::Fd004),
            other => Err(Error::InvalidArgument(format!(
                "unknown subset {other:?} (expected FD001, FD002, FD003 or FD004)"
            ))),
        }
    }
}

struct SubsetProfile {
    n_units: usize,
    weibull_shape: f64,
    weibull_scale: f64,
    min_life: u32,
    max_life: u32,
    /// Six-regime operating conditions instead of a single regime.
    multi_regime: bool,
    /// Sensors (0-based) that stay exactly constant in this subset.
    constant_sensors: &'static [usize],
}

const SINGLE_REGIME_CONSTANTS: &[usize] = &[0, 4, 9, 15, 17, 18];

impl CmapssSubset {
    fn profile(&self) -> SubsetProfile {
        match self {
            CmapssSubset::Fd001 => SubsetProfile {
                n_units: 100,
                weibull_shape: 4.0,
                weibull_scale: 219.0,
                min_life: 128,
                max_life: 362,
                multi_regime: false,
                constant_sensors: SINGLE_REGIME_CONSTANTS,
            },
            CmapssSubset::Fd002 => SubsetProfile {
                n_units: 260,
                weibull_shape: 4.5,
                weibull_scale: 210.0,
                min_life: 128,
                max_life: 378,
                multi_regime: true,
                constant_sensors: &[],
            },
            CmapssSubset::Fd003 => SubsetProfile {
                n_units: 100,
                weibull_shape: 3.5,
                weibull_scale: 260.0,
                min_life: 145,
                max_life: 525,
                multi_regime: false,
                constant_sensors: SINGLE_REGIME_CONSTANTS,
            },
            CmapssSubset::Fd004 => SubsetProfile {
                n_units: 246,
                weibull_shape: 4.0,
                weibull_scale: 235.0,
                min_life: 128,
                max_life: 378,
                multi_regime: true,
                constant_sensors: &[],
            },
        }
    }
}

/// Healthy baseline and total degradation swing per sensor channel.
/// A zero swing marks a physically flat channel.
const SENSOR_BASE: [f64; SENSOR_COUNT] = [
    518.67, 641.82, 1585.0, 1398.9, 14.62, 21.61, 554.0, 2388.0, 9050.0, 1.3, 47.2, 521.7, 2388.1,
    8130.0, 8.44, 0.03, 392.0, 2388.0, 100.0, 38.95, 23.35,
];
const SENSOR_SWING: [f64; SENSOR_COUNT] = [
    0.0, 2.2, 18.0, 12.0, 0.0, 0.04, -4.5, 0.45, 28.0, 0.0, 1.4, -4.2, 0.42, 18.0, 0.28, 0.0, 7.0,
    0.0, 0.0, -1.1, -0.65,
];
/// Noise level relative to the degradation swing.
const NOISE_FRACTION: f64 = 0.05;

/// (op_set_1, op_set_2, op_set_3) and a thermal shift factor for the six
/// operating regimes used by the multi-regime subsets.
const REGIMES: [([f64; 3], f64); 6] = [
    ([0.0, 0.0, 100.0], 1.0),
    ([10.0, 0.25, 100.0], 0.985),
    ([20.0, 0.7, 100.0], 0.97),
    ([25.0, 0.62, 60.0], 1.015),
    ([35.0, 0.84, 100.0], 0.955),
    ([42.0, 0.84, 100.0], 0.94),
];

fn subset_rng(subset: CmapssSubset, seed: u64) -> ChaCha8Rng {
    let tag = match subset {
        CmapssSubset::Fd001 => 1u64,
        CmapssSubset::Fd002 => 2,
        CmapssSubset::Fd003 => 3,
        CmapssSubset::Fd004 => 4,
    };
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Generates a complete run-to-failure log for one subset. The same
/// (subset, seed) pair always yields the same records.
pub fn simulate_subset(subset: CmapssSubset, seed: u64) -> Vec<CmapssRecord> {
    let profile = subset.profile();
    let mut rng = subset_rng(subset, seed);
    let unit_noise = Normal::new(0.0, 1.0).unwrap();
    let mut records = Vec::new();
    for unit in 1..=profile.n_units as u32 {
        let u: f64 = rng.random();
        let raw = profile.weibull_scale * (-(1.0 - u).ln()).powf(1.0 / profile.weibull_shape);
        let life = (raw.round() as u32).clamp(profile.min_life, profile.max_life);
        for cycle in 1..=life {
            // Degradation ramps slowly at first, then accelerates.
            let wear = (cycle as f64 / life as f64).powf(1.5);
            let (ops, shift) = if profile.multi_regime {
                let r = rng.random_range(0..REGIMES.len());
                let (base_ops, shift) = REGIMES[r];
                let ops = [
                    base_ops[0] + 0.0008 * unit_noise.sample(&mut rng),
                    base_ops[1] + 0.0003 * unit_noise.sample(&mut rng),
                    base_ops[2],
                ];
                (ops, shift)
            } else {
                let ops = [
                    0.0015 * unit_noise.sample(&mut rng),
                    0.0003 * unit_noise.sample(&mut rng),
                    100.0,
                ];
                (ops, 1.0)
            };
            let mut sensors = [0.0; SENSOR_COUNT];
            for j in 0..SENSOR_COUNT {
                if profile.constant_sensors.contains(&j) {
                    sensors[j] = SENSOR_BASE[j];
                } else {
                    let swing = SENSOR_SWING[j];
                    let noise = NOISE_FRACTION * swing.abs() * unit_noise.sample(&mut rng);
                    sensors[j] = SENSOR_BASE[j] * shift + swing * wear + noise;
                }
            }
            records.push(CmapssRecord { unit, cycle, op_settings: ops, sensors });
        }
    }
    records
}

/// Writes records in the whitespace-separated 26-column layout.
pub fn write_cmapss<W: Write>(records: &[CmapssRecord], mut out: W) -> Result<()> {
    for r in records {
        write!(out, "{} {}", r.unit, r.cycle)?;
        for v in &r.op_settings {
            write!(out, " {v:.4}")?;
        }
        for v in &r.sensors {
            write!(out, " {v:.4}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Proportional-hazards sample with known coefficients, for recovery
/// tests. Covariates are iid standard normal; event times follow an
/// exponential with rate `baseline_rate * exp(beta . x)`; censoring is an
/// independent exponential with rate `censoring_rate` (zero disables it).
pub fn simulate_cox_dataset(
    n: usize,
    beta: &[f64],
    baseline_rate: f64,
    censoring_rate: f64,
    seed: u64,
) -> TimeToEventDataset {
    assert!(n >= 2 && baseline_rate > 0.0 && censoring_rate >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let x: Vec<f64> = (0..beta.len()).map(|_| normal.sample(&mut rng)).collect();
        let lin: f64 = beta.iter().zip(&x).map(|(b, v)| b * v).sum();
        let u: f64 = rng.random();
        let event_time = -(1.0 - u).ln() / (baseline_rate * lin.exp());
        let censor_time = if censoring_rate > 0.0 {
            let v: f64 = rng.random();
            -(1.0 - v).ln() / censoring_rate
        } else {
            f64::INFINITY
        };
        let event = event_time <= censor_time;
        let time = event_time.min(censor_time).max(1e-9);
        rows.push(TimeToEventRow { unit_id: (i + 1).to_string(), time, event, covariates: x });
    }
    let names = (1..=beta.len()).map(|j| format!("x{j}")).collect();
    TimeToEventDataset::new(rows, names).expect("simulated sample is always valid")
}

/// Two clearly separated risk groups driven by the first feature, plus
/// uninformative noise features. Every unit fails, so tree and ensemble
/// tests get clean, strong splits.
pub fn simulate_two_group_dataset(n: usize, n_noise_features: usize, seed: u64) -> TimeToEventDataset {
    assert!(n >= 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let short_lived = i % 2 == 0;
        let group = if short_lived { -1.0 } else { 1.0 };
        let scale = if short_lived { 20.0 } else { 80.0 };
        let jitter: f64 = normal.sample(&mut rng);
        let time = scale * (0.1 * jitter).exp();
        let mut covariates = vec![group];
        covariates.extend((0..n_noise_features).map(|_| normal.sample(&mut rng)));
        rows.push(TimeToEventRow { unit_id: (i + 1).to_string(), time, event: true, covariates });
    }
    let mut names = vec!["group".to_string()];
    names.extend((1..=n_noise_features).map(|j| format!("noise{j}")));
    TimeToEventDataset::new(rows, names).expect("simulated sample is always valid")
}
