use alloc::vec;
use alloc::vec::Vec;

use super::{argmax_label, ColumnRule, EstimatedPool};
use crate::error::{domain, Result};
use crate::math::ln;
use crate::model::{GroundTruth, Label, LabelMatrix, WorkerPool};

/// Per-item maximum likelihood under fixed confusion matrices:
/// `argmax_g sum_i ln pi^(i)_{g, X_ij}`.
#[derive(Debug, Clone)]
pub struct LikelihoodRule {
    k: usize,
    m: usize,
    /// `ln pi^(i)_{g h}` at `(i * k + (h - 1)) * k + (g - 1)`, so one
    /// observed label reads a contiguous run of class scores.
    logs: Vec<f64>,
}

impl LikelihoodRule {
    pub fn new(pool: &WorkerPool) -> Result<Self> {
        if pool.min_entry() <= 0.0 {
            return Err(domain("maximum likelihood needs strictly positive confusion matrices"));
        }
        let (k, m) = (pool.k(), pool.m());
        let mut logs = vec![0.0; m * k * k];
        for (i, w) in pool.workers().iter().enumerate() {
            for g in 0..k {
                for h in 0..k {
                    logs[(i * k + h) * k + g] = ln(w.prob(g as Label + 1, h as Label + 1));
                }
            }
        }
        Ok(LikelihoodRule { k, m, logs })
    }

    /// Log-likelihood of each class for one column, written into `scores`.
    pub fn scores_into(&self, column: &[Label], scores: &mut [f64]) {
        let k = self.k;
        scores.fill(0.0);
        for (i, &x) in column.iter().enumerate() {
            let start = (i * k + x as usize - 1) * k;
            for (s, l) in scores.iter_mut().zip(&self.logs[start..start + k]) {
                *s += l;
            }
        }
    }
}

impl ColumnRule for LikelihoodRule {
    fn k(&self) -> usize {
        self.k
    }

    fn m(&self) -> usize {
        self.m
    }

    fn decide(&self, column: &[Label]) -> Label {
        let mut scores = vec![0.0; self.k];
        self.scores_into(column, &mut scores);
        argmax_label(&scores)
    }
}

/// Maximum likelihood with the true confusion matrices.
pub fn oracle_mle(labels: &LabelMatrix, pool: &WorkerPool) -> Result<GroundTruth> {
    LikelihoodRule::new(pool)?.apply(labels)
}

/// Maximum likelihood with estimated confusion matrices substituted.
pub fn plugin_mle(labels: &LabelMatrix, estimate: &EstimatedPool) -> Result<GroundTruth> {
    LikelihoodRule::new(estimate.pool())?.apply(labels)
}
