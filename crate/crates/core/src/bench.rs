//! Inference latency: minimum over trials of the mean single-window
//! prediction time.

use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Distinct pre-generated inputs cycled through during timing.
const INPUT_POOL: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub trials: usize,
    pub predictions_per_trial: usize,
    pub warmup_predictions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 20,
            predictions_per_trial: 1000,
            warmup_predictions: 100,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.predictions_per_trial == 0 {
            return Err(Error::Usage("trials and predictions_per_trial must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
}

impl HostInfo {
    pub fn current() -> Self {
        HostInfo {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub model_name: String,
    pub parameter_count: usize,
    pub input_shape: Shape,
    pub trials: usize,
    pub predictions_per_trial: usize,
    pub warmup_predictions: usize,
    pub trial_mean_ms: Vec<f64>,
    pub min_mean_latency_ms: f64,
    pub clock_resolution_ns: f64,
    /// Set when the clock resolution exceeds 1% of the fastest trial mean.
    pub clock_warning: bool,
    pub host: HostInfo,
}

/// Smallest non-zero step observed between consecutive clock reads.
pub fn clock_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

pub fn random_inputs(shape: Shape, count: usize, seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Tensor::from_fn(shape, |_, _, _| rng.sample(StandardNormal)))
        .collect()
}

/// Times `predict` on batch-1 inputs of `input_shape`. Inputs are generated
/// before any timing starts.
pub fn benchmark<T>(
    model_name: &str,
    parameter_count: usize,
    input_shape: Shape,
    mut predict: impl FnMut(&Tensor) -> Result<T>,
    config: &BenchConfig,
) -> Result<BenchReport> {
    config.validate()?;
    let inputs = random_inputs(input_shape, INPUT_POOL.min(config.predictions_per_trial.max(1)), config.seed);
    for k in 0..config.warmup_predictions {
        black_box(predict(black_box(&inputs[k % inputs.len()]))?);
    }
    let mut trial_mean_ms = Vec::with_capacity(config.trials);
    for _ in 0..config.trials {
        let start = Instant::now();
        for k in 0..config.predictions_per_trial {
            black_box(predict(black_box(&inputs[k % inputs.len()]))?);
        }
        let elapsed = start.elapsed();
        trial_mean_ms.push(elapsed.as_secs_f64() * 1e3 / config.predictions_per_trial as f64);
    }
    let min_mean_latency_ms = trial_mean_ms.iter().copied().fold(f64::INFINITY, f64::min);
    if min_mean_latency_ms.is_nan() || min_mean_latency_ms <= 0.0 {
        return Err(Error::Numeric("measured a non-positive mean latency".into()));
    }
    let resolution = clock_resolution().as_secs_f64() * 1e9;
    let clock_warning = resolution > 0.01 * min_mean_latency_ms * 1e6;
    if clock_warning {
        log::warn!("clock resolution {resolution} ns is coarser than 1% of the {min_mean_latency_ms} ms mean");
    }
    Ok(BenchReport {
        model_name: model_name.into(),
        parameter_count,
        input_shape,
        trials: config.trials,
        predictions_per_trial: config.predictions_per_trial,
        warmup_predictions: config.warmup_predictions,
        trial_mean_ms,
        min_mean_latency_ms,
        clock_resolution_ns: resolution,
        clock_warning,
        host: HostInfo::current(),
    })
}

/// Plain-text table with one row per report.
pub fn format_table(reports: &[BenchReport]) -> String {
    let name_w = reports.iter().map(|r| r.model_name.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<name_w$}  {:>10}  {:>22}\n", "model", "parameters", "min mean latency (ms)");
    for r in reports {
        out.push_str(&format!(
            "{:<name_w$}  {:>10}  {:>22.4}\n",
            r.model_name, r.parameter_count, r.min_mean_latency_ms
        ));
    }
    out
}
