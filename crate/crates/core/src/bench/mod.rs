//! Metrics, memory accounting and the three synthetic experiments.

mod experiments;
mod output;

use std::time::Instant;

use serde::Serialize;

use crate::count_sketch::CsPlan;
use crate::error::{Error, Result};
use crate::hcs::HcsPlan;
use crate::tensor::DenseTensor;

pub use experiments::{
    run_contract_experiment, run_kron_experiment, run_spike_experiment, spiked_matrix,
};
pub use output::{plot_rows, write_csv};

/// One (method, compression ratio) cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub experiment: String,
    pub method: String,
    pub compression_ratio: f64,
    pub sketch_dims: String,
    pub replicas: usize,
    pub seed: u64,
    pub compress_time_ns: u64,
    pub recover_time_ns: u64,
    pub hash_entries: usize,
    pub output_entries: usize,
    pub relative_error: f64,
    /// Hash entries the implementation actually stores. Differs from
    /// `hash_entries` only for Count Sketch plans built from factor hashes.
    pub stored_hash_entries: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicas: usize,
    pub ratios: Vec<f64>,
    /// Measure wall-clock times. When off the time columns are 0 and the
    /// output depends only on the seed.
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn new(seed: u64, replicas: usize, ratios: Vec<f64>) -> Self {
        Self {
            seed,
            replicas,
            ratios,
            timings: false,
        }
    }

    pub fn with_timings(mut self, timings: bool) -> Self {
        self.timings = timings;
        self
    }
}

/// `||estimate - truth||_F / ||truth||_F`.
pub fn relative_error(estimate: &DenseTensor, truth: &DenseTensor) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate of shape {:?} against truth of shape {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    relative_error_flat(estimate.data(), truth.data())
}

pub(crate) fn relative_error_flat(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    let norm = truth.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryAccount {
    /// Index plus sign entries, counting one of each per input element for
    /// Count Sketch.
    pub hash_entries: usize,
    /// Sketch entries over all replicas.
    pub output_entries: usize,
    /// Hash entries actually held in memory.
    pub stored_hash_entries: usize,
}

impl MemoryAccount {
    pub fn total(&self) -> usize {
        self.hash_entries + self.output_entries
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PlanRef<'a> {
    Cs(&'a CsPlan),
    Hcs(&'a HcsPlan),
}

pub fn memory_account(plan: PlanRef<'_>) -> MemoryAccount {
    match plan {
        PlanRef::Cs(p) => MemoryAccount {
            hash_entries: p.flat_hash_entries(),
            output_entries: p.d() * p.c(),
            stored_hash_entries: p.stored_hash_entries(),
        },
        PlanRef::Hcs(p) => MemoryAccount {
            hash_entries: p.hash_entries(),
            output_entries: p.d() * p.sketch_len(),
            stored_hash_entries: p.hash_entries(),
        },
    }
}

/// Parses a comma-separated list of positive compression ratios.
pub fn parse_ratios(s: &str) -> Result<Vec<f64>> {
    let out = s
        .split(',')
        .map(|part| {
            let part = part.trim();
            let r: f64 = part
                .parse()
                .map_err(|_| Error::Parse(format!("not a number: {part:?}")))?;
            if !r.is_finite() || r < 1.0 {
                return Err(Error::Parse(format!("ratio must be finite and >= 1: {part}")));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::Parse("empty ratio list".into()));
    }
    Ok(out)
}

/// Runs `f`, returning its value and elapsed nanoseconds. With timing
/// enabled one warm-up call is made and discarded; otherwise the time is 0.
pub(crate) fn timed<T>(enabled: bool, mut f: impl FnMut() -> Result<T>) -> Result<(T, u64)> {
    if !enabled {
        return Ok((f()?, 0));
    }
    f()?;
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_nanos() as u64))
}
