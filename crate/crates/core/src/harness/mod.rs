//! Monte Carlo and exact-enumeration experiments.
//!
//! Worker pools for a grid of `m` values are prefixes of one worker stream
//! described by a [`PoolSpec`], so predictions and simulated data at
//! different `m` share their first workers. Trial `t` always simulates with
//! the seed derived from `(seed, t)`; combined with the per-cell seeding of
//! [`generate_labels`](crate::model::generate_labels), the labels of worker
//! `i` in trial `t` do not depend on `m` or on how trials are scheduled.

mod exact;
mod experiment;
mod fit;
mod sample_size;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{validation, Result};
use crate::model::{ConfusionMatrix, OneCoinPool, WorkerPool};
use crate::rng::{derive_seed, UniformStream};

pub use exact::{column_rule, exact_error, union_upper_bound, EXACT_COLUMN_LIMIT};
pub use experiment::{
    run_experiment, Experiment, ExperimentConfig, ExperimentResult, FitIssue, ResultRow, RuleFit, MIN_ERRORS_FOR_FIT,
};
pub use fit::fit_exponent;
pub use sample_size::{verify_sample_size, SampleSizePlan, SampleSizeReport, SAFETY_FACTOR};

const WORKER_STREAM_TAG: u64 = 0x574f_524b;
const LABEL_TAG: u64 = 0x4c41_4245;
const POOL_TAG: u64 = 0x504f_4f4c;

/// Workers used to pin down the exponent of a randomly drawn stream.
pub const REFERENCE_STREAM_LEN: usize = 1024;

/// An unbounded worker stream; a pool of size `m` is its first `m` workers.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolSpec {
    /// The given workers, repeated cyclically.
    Explicit(WorkerPool),
    /// One-coin accuracies, repeated cyclically.
    OneCoin(Vec<f64>),
    /// One-coin accuracies drawn uniformly from `[low, high]`.
    OneCoinUniform { low: f64, high: f64 },
}

impl PoolSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PoolSpec::Explicit(_) => Ok(()),
            PoolSpec::OneCoin(p) => OneCoinPool::new(p.clone()).map(drop),
            PoolSpec::OneCoinUniform { low, high } => {
                if !(0.0 <= *low && low <= high && *high <= 1.0) {
                    return Err(validation(format!(
                        "accuracy range [{low}, {high}] is not inside [0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn k(&self) -> usize {
        match self {
            PoolSpec::Explicit(pool) => pool.k(),
            _ => 2,
        }
    }

    /// The first `m` workers of the stream generated from `seed`.
    pub fn prefix(&self, m: usize, seed: u64) -> Result<WorkerPool> {
        self.validate()?;
        if m == 0 {
            return Err(validation("a pool needs at least one worker"));
        }
        match self {
            PoolSpec::Explicit(pool) => WorkerPool::new(pool.workers().iter().cycle().take(m).cloned().collect()),
            PoolSpec::OneCoin(p) => OneCoinPool::new(p.iter().copied().cycle().take(m).collect()).map(|p| p.to_pool()),
            PoolSpec::OneCoinUniform { low, high } => {
                let mut stream = UniformStream::new(derive_seed(seed, &[WORKER_STREAM_TAG]), 0, 0);
                let p = (0..m).map(|_| low + (high - low) * stream.next_unit()).collect();
                OneCoinPool::new(p).map(|p| p.to_pool())
            }
        }
    }

    /// The pool whose exponent stands for the whole stream: one period of a
    /// cyclic spec, or the first [`REFERENCE_STREAM_LEN`] random workers.
    pub fn reference_pool(&self, seed: u64) -> Result<WorkerPool> {
        let m = match self {
            PoolSpec::Explicit(pool) => pool.m(),
            PoolSpec::OneCoin(p) => p.len(),
            PoolSpec::OneCoinUniform { .. } => REFERENCE_STREAM_LEN,
        };
        self.prefix(m, seed)
    }
}

pub(crate) fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, &[LABEL_TAG, trial as u64])
}

/// A pool of `m` random `k x k` workers with strictly positive entries.
///
/// Each row is a normalized vector of `Exp(1) + floor` weights with
/// `diagonal_boost` added to the diagonal weight before normalizing.
pub fn random_pool(k: usize, m: usize, diagonal_boost: f64, floor: f64, seed: u64) -> Result<WorkerPool> {
    if !(floor > 0.0) || !(diagonal_boost >= 0.0) {
        return Err(validation("random pools need floor > 0 and diagonal_boost >= 0"));
    }
    let mut stream = UniformStream::new(derive_seed(seed, &[POOL_TAG, k as u64, m as u64]), 0, 0);
    let workers = (0..m)
        .map(|_| {
            let mut data = Vec::with_capacity(k * k);
            for g in 0..k {
                let start = data.len();
                for h in 0..k {
                    let e = -crate::math::ln(1.0 - stream.next_unit());
                    data.push(e + floor + if g == h { diagonal_boost } else { 0.0 });
                }
                let total: f64 = data[start..].iter().sum();
                for x in &mut data[start..] {
                    *x /= total;
                }
            }
            ConfusionMatrix::from_flat(k, data)
        })
        .collect::<Result<Vec<_>>>()?;
    WorkerPool::new(workers)
}
