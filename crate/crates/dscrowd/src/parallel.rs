//! Multi-threaded runners. Each reproduces its serial counterpart in
//! `dscrowd_core` exactly: work is split by trial or worker, and every
//! piece draws from its own derived stream.

use anyhow::Result;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use dscrowd_core::harness::SampleSizePlan;
use dscrowd_core::model::sample_segment;
use dscrowd_core::{
    Experiment, ExperimentConfig, ExperimentResult, GroundTruth, LabelMatrix, PoolSpec, SampleSizeReport, WorkerPool,
    MISSING,
};

/// A rayon pool with `threads` workers; `None` means one per available core.
pub fn thread_pool(threads: Option<usize>) -> Result<ThreadPool> {
    let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    Ok(ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?)
}

/// Same output as `dscrowd_core::generate_labels`, one task per worker row.
pub fn generate_labels(pool: &WorkerPool, truth: &GroundTruth, seed: u64, threads: &ThreadPool) -> Result<LabelMatrix> {
    truth.check_k(pool.k())?;
    let (m, n) = (pool.m(), truth.n());
    let mut data = vec![MISSING; m * n];
    threads.install(|| {
        data.par_chunks_exact_mut(n)
            .enumerate()
            .try_for_each(|(i, row)| sample_segment(pool, truth, seed, i, 0, row))
    })?;
    Ok(LabelMatrix::new(pool.k(), m, n, data)?)
}

/// Runs trials in parallel, one grid point at a time. `on_m` is called
/// after each grid point with its worker count.
pub fn run_experiment(
    config: &ExperimentConfig,
    threads: &ThreadPool,
    mut on_m: impl FnMut(usize),
) -> Result<ExperimentResult> {
    let experiment = Experiment::new(config.clone())?;
    let mut counts = Vec::with_capacity(config.m_grid.len());
    for (mi, &m) in config.m_grid.iter().enumerate() {
        let per_m = threads.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| experiment.run_trial(mi, t))
                .collect::<Result<Vec<_>, _>>()
        })?;
        counts.push(per_m);
        on_m(m);
    }
    Ok(experiment.finish(&counts)?)
}

pub fn verify_sample_size(
    spec: &PoolSpec,
    epsilon: f64,
    n: usize,
    trials: usize,
    seed: u64,
    threads: &ThreadPool,
) -> Result<SampleSizeReport> {
    let plan = SampleSizePlan::new(spec, epsilon, n, seed)?;
    let errors = threads.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| plan.run_trial(t))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(plan.finish(&errors)?)
}
