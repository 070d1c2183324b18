use alloc::vec::Vec;

use super::{experiment::apply_rule, trial_seed, PoolSpec};
use crate::aggregate::{EmOptions, Rule};
use crate::error::{validation, Result};
use crate::exponent::{minimax_exponent, required_workers};
use crate::math::ceil;
use crate::model::{count_errors, generate_labels, GroundTruth, WorkerPool};

/// Multiplier on the leading-order worker count absorbing the `1 + o(1)`
/// factor at finite `m`.
pub const SAFETY_FACTOR: f64 = 1.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSizeReport {
    pub i_pi: f64,
    pub epsilon: f64,
    pub n: usize,
    pub m_star: usize,
    pub m_used: usize,
    pub trials: usize,
    /// Trials whose error rate was at most `epsilon`.
    pub within_target: usize,
    /// Trials with no misclassified item.
    pub perfect: usize,
    pub mean_error: f64,
}

impl SampleSizeReport {
    pub fn fraction_within_target(&self) -> f64 {
        self.within_target as f64 / self.trials as f64
    }

    pub fn fraction_perfect(&self) -> f64 {
        self.perfect as f64 / self.trials as f64
    }
}

/// Sample-size check split into independent trials.
#[derive(Debug, Clone)]
pub struct SampleSizePlan {
    i_pi: f64,
    epsilon: f64,
    m_star: usize,
    pool: WorkerPool,
    truth: GroundTruth,
    seed: u64,
}

impl SampleSizePlan {
    pub fn new(spec: &PoolSpec, epsilon: f64, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(validation("n must be at least 1"));
        }
        let i_pi = minimax_exponent(&spec.reference_pool(seed)?)?.i_pi;
        let m_star = required_workers(i_pi, epsilon)?;
        let m_used = (ceil(SAFETY_FACTOR * m_star as f64) as usize).max(1);
        Ok(SampleSizePlan {
            i_pi,
            epsilon,
            m_star,
            pool: spec.prefix(m_used, seed)?,
            truth: GroundTruth::with_proportions(n, spec.k(), None)?,
            seed,
        })
    }

    pub fn m_star(&self) -> usize {
        self.m_star
    }

    pub fn m_used(&self) -> usize {
        self.pool.m()
    }

    /// Oracle misclassifications in trial `trial`.
    pub fn run_trial(&self, trial: usize) -> Result<u64> {
        let labels = generate_labels(&self.pool, &self.truth, trial_seed(self.seed, trial))?;
        let estimate = apply_rule(Rule::OracleMle, &labels, &self.pool, &EmOptions::default())?;
        Ok(count_errors(estimate.labels(), self.truth.labels()) as u64)
    }

    pub fn finish(&self, errors: &[u64]) -> Result<SampleSizeReport> {
        if errors.is_empty() {
            return Err(validation("at least one trial is required"));
        }
        let n = self.truth.n();
        let within_target = errors.iter().filter(|&&e| e as f64 / n as f64 <= self.epsilon).count();
        let perfect = errors.iter().filter(|&&e| e == 0).count();
        let total: u64 = errors.iter().sum();
        Ok(SampleSizeReport {
            i_pi: self.i_pi,
            epsilon: self.epsilon,
            n,
            m_star: self.m_star,
            m_used: self.m_used(),
            trials: errors.len(),
            within_target,
            perfect,
            mean_error: total as f64 / (n * errors.len()) as f64,
        })
    }
}

/// Simulates the oracle rule at `ceil(1.3 m*)` workers, where `m*` is the
/// leading-order requirement for target error `epsilon`.
pub fn verify_sample_size(
    spec: &PoolSpec,
    epsilon: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SampleSizeReport> {
    let plan = SampleSizePlan::new(spec, epsilon, n, seed)?;
    let errors = (0..trials).map(|t| plan.run_trial(t)).collect::<Result<Vec<_>>>()?;
    plan.finish(&errors)
}
