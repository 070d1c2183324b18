//! Method-of-moments worker accuracies for the two-label one-coin model.
//!
//! With `gamma` the share of items whose truth is label 2, a worker with
//! accuracy `p` reports label 2 at rate `gamma p + (1 - gamma)(1 - p)`.
//! Inverting that moment gives
//! `p_hat = (freq_2 - (1 - gamma_hat)) / (2 gamma_hat - 1)`, where
//! `gamma_hat` is read off the majority-vote labels.

use alloc::vec::Vec;

use super::{majority_vote, EstimatedPool};
use crate::error::{validation, Error, Result};
use crate::model::{LabelMatrix, OneCoinPool};

/// `|2 gamma_hat - 1|` below this is treated as unidentifiable.
pub const DEGENERACY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct OneCoinEstimate {
    /// Clamped into `[1/(2n), 1 - 1/(2n)]` and sign-aligned.
    pub p_hat: Vec<f64>,
    /// Moment estimates before clamping and sign alignment.
    pub raw: Vec<f64>,
    pub gamma_hat: f64,
    /// Whether every accuracy was replaced by `1 - p` to make the average
    /// worker better than chance.
    pub flipped: bool,
}

impl OneCoinEstimate {
    pub fn pool(&self) -> OneCoinPool {
        OneCoinPool::new(self.p_hat.clone()).expect("clamped into (0, 1)")
    }

    pub fn to_estimate(&self) -> EstimatedPool {
        EstimatedPool::new(self.pool().to_pool()).expect("clamped accuracies are strictly inside (0, 1)")
    }

    /// `(1/m) sum (2 p_hat - 1)^2`, reported but not enforced.
    pub fn spread(&self) -> f64 {
        self.p_hat
            .iter()
            .map(|p| (2.0 * p - 1.0) * (2.0 * p - 1.0))
            .sum::<f64>()
            / self.p_hat.len() as f64
    }
}

pub fn one_coin_estimate(labels: &LabelMatrix) -> Result<OneCoinEstimate> {
    if labels.k() != 2 {
        return Err(validation("the one-coin estimator needs k = 2"));
    }
    labels.require_complete()?;
    let n = labels.n() as f64;
    let reference = majority_vote(labels)?;
    let gamma_hat = reference.labels().iter().filter(|&&y| y == 2).count() as f64 / n;
    let denom = 2.0 * gamma_hat - 1.0;
    if denom.abs() < DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate { gamma_hat });
    }
    let raw: Vec<f64> = labels
        .rows()
        .map(|row| {
            let freq_2 = row.iter().filter(|&&x| x == 2).count() as f64 / n;
            (freq_2 - (1.0 - gamma_hat)) / denom
        })
        .collect();
    let floor = 1.0 / (2.0 * n);
    let mut p_hat: Vec<f64> = raw.iter().map(|p| p.clamp(floor, 1.0 - floor)).collect();
    let bias: f64 = p_hat.iter().map(|p| 2.0 * p - 1.0).sum::<f64>() / p_hat.len() as f64;
    let flipped = bias < 0.0;
    if flipped {
        for p in &mut p_hat {
            *p = 1.0 - *p;
        }
    }
    Ok(OneCoinEstimate {
        p_hat,
        raw,
        gamma_hat,
        flipped,
    })
}
