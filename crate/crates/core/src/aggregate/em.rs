//! Dawid-Skene EM with additive (Dirichlet-MAP) smoothing of the M-step.
//!
//! The objective tracked across iterations is the observed-data
//! log-likelihood plus `lambda * sum ln pi`, the penalty whose maximizer is
//! the smoothed M-step. EM never decreases it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{smooth_confusion, EstimatedPool, PosteriorMatrix};
use crate::error::{validation, Result};
use crate::math::{exp, ln, log_sum_exp};
use crate::model::{GroundTruth, Label, LabelMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iters: usize,
    /// Stop once the mean (per item) objective rises by less than this.
    pub tol: f64,
    /// Additive count smoothing in the M-step.
    pub smoothing: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iters: 100,
            tol: 1e-8,
            smoothing: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub estimate: EstimatedPool,
    pub posterior: PosteriorMatrix,
    pub labels: GroundTruth,
    pub iters: usize,
    /// Mean penalized log-likelihood after each iteration.
    pub trace: Vec<f64>,
}

fn check_shapes(labels: &LabelMatrix, k: usize, n: usize) -> Result<()> {
    labels.require_complete()?;
    if labels.k() != k || labels.n() != n {
        return Err(validation(format!(
            "labels are {} items with k = {}, expected {n} items with k = {k}",
            labels.n(),
            labels.k()
        )));
    }
    Ok(())
}

/// `pi_gh^(i) ∝ sum_j P(y_j = g) 1{X_ij = h}`, smoothed by `lambda`.
pub fn em_m_step(labels: &LabelMatrix, posterior: &PosteriorMatrix, lambda: f64) -> Result<EstimatedPool> {
    let k = posterior.k();
    check_shapes(labels, k, posterior.n())?;
    let counts: Vec<Vec<f64>> = labels
        .rows()
        .map(|row| {
            let mut grid = vec![0.0; k * k];
            for (&x, post) in row.iter().zip(posterior.rows()) {
                let h = x as usize - 1;
                for (g, &p) in post.iter().enumerate() {
                    grid[g * k + h] += p;
                }
            }
            grid
        })
        .collect();
    smooth_confusion(k, &counts, lambda)
}

fn check_prior(prior: &[f64], k: usize) -> Result<()> {
    let sum: f64 = prior.iter().sum();
    if prior.len() != k || prior.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
        return Err(validation(format!(
            "class prior must be a probability vector of length {k}"
        )));
    }
    Ok(())
}

/// Posterior and the summed log marginal likelihood of every item.
fn posterior_and_loglik(
    labels: &LabelMatrix,
    estimate: &EstimatedPool,
    prior: &[f64],
) -> Result<(PosteriorMatrix, f64)> {
    let pool = estimate.pool();
    let (k, n) = (pool.k(), labels.n());
    check_shapes(labels, k, n)?;
    if labels.m() != pool.m() {
        return Err(validation(format!(
            "estimate has {} workers, labels have {}",
            pool.m(),
            labels.m()
        )));
    }
    check_prior(prior, k)?;
    let mut probs: Vec<f64> = Vec::with_capacity(n * k);
    for _ in 0..n {
        probs.extend(prior.iter().map(|&p| ln(p)));
    }
    for (w, row) in pool.workers().iter().zip(labels.rows()) {
        let mut table = vec![0.0; k * k];
        for g in 0..k {
            for h in 0..k {
                table[h * k + g] = ln(w.prob(g as Label + 1, h as Label + 1));
            }
        }
        for (scores, &x) in probs.chunks_exact_mut(k).zip(row) {
            let start = (x as usize - 1) * k;
            for (s, l) in scores.iter_mut().zip(&table[start..start + k]) {
                *s += l;
            }
        }
    }
    let mut loglik = 0.0;
    for scores in probs.chunks_exact_mut(k) {
        let norm = log_sum_exp(scores.iter().copied());
        loglik += norm;
        for s in scores.iter_mut() {
            *s = exp(*s - norm);
        }
    }
    Ok((PosteriorMatrix::new(k, n, probs)?, loglik))
}

/// `P(y_j = g) ∝ prior_g prod_i pi^(i)_{g, X_ij}`, normalized per item.
pub fn em_e_step(labels: &LabelMatrix, estimate: &EstimatedPool, prior: &[f64]) -> Result<PosteriorMatrix> {
    posterior_and_loglik(labels, estimate, prior).map(|(post, _)| post)
}

fn smoothing_penalty(estimate: &EstimatedPool, lambda: f64) -> f64 {
    lambda
        * estimate
            .pool()
            .workers()
            .iter()
            .flat_map(|w| w.rows().flatten().map(|&p| ln(p)))
            .sum::<f64>()
}

/// Observed-data log-likelihood plus the smoothing penalty
/// `lambda * sum ln pi`.
pub fn log_likelihood(labels: &LabelMatrix, estimate: &EstimatedPool, prior: &[f64], lambda: f64) -> Result<f64> {
    let (_, ll) = posterior_and_loglik(labels, estimate, prior)?;
    Ok(ll + smoothing_penalty(estimate, lambda))
}

/// Alternates M- and E-steps from `init` under a uniform class prior.
pub fn em_run(labels: &LabelMatrix, init: &PosteriorMatrix, options: &EmOptions) -> Result<EmOutcome> {
    if options.max_iters == 0 {
        return Err(validation("EM needs max_iters >= 1"));
    }
    let k = init.k();
    let prior = vec![1.0 / k as f64; k];
    let n = labels.n() as f64;
    let mut posterior = init.clone();
    let mut trace = Vec::new();
    let mut estimate = None;
    for _ in 0..options.max_iters {
        let est = em_m_step(labels, &posterior, options.smoothing)?;
        let (post, ll) = posterior_and_loglik(labels, &est, &prior)?;
        let objective = (ll + smoothing_penalty(&est, options.smoothing)) / n;
        posterior = post;
        estimate = Some(est);
        let converged = trace.last().is_some_and(|&prev: &f64| objective - prev < options.tol);
        trace.push(objective);
        if converged {
            break;
        }
    }
    Ok(EmOutcome {
        estimate: estimate.expect("at least one iteration"),
        labels: posterior.argmax(),
        posterior,
        iters: trace.len(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::oracle_mle;
    use crate::model::{generate_labels, ConfusionMatrix, OneCoinPool, WorkerPool};

    #[test]
    fn uninformative_worker_returns_prior() {
        let est = EstimatedPool::new(
            WorkerPool::new(vec![ConfusionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()]).unwrap(),
        )
        .unwrap();
        let labels = LabelMatrix::from_rows(2, vec![vec![1, 2, 2, 1]]).unwrap();
        let post = em_e_step(&labels, &est, &[0.3, 0.7]).unwrap();
        for row in post.rows() {
            assert!((row[0] - 0.3).abs() < 1e-15 && (row[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn unanimous_bayes_arithmetic() {
        let est = EstimatedPool::new(OneCoinPool::uniform(0.9, 3).unwrap().to_pool()).unwrap();
        let labels = LabelMatrix::from_rows(2, vec![vec![1], vec![1], vec![1]]).unwrap();
        let post = em_e_step(&labels, &est, &[0.5, 0.5]).unwrap();
        let expected = 0.729 / (0.729 + 0.001);
        assert!((post.row(0)[0] - expected).abs() < 1e-12, "{}", post.row(0)[0]);
    }

    #[test]
    fn true_pool_posterior_matches_oracle() {
        let pool = OneCoinPool::new(vec![0.6, 0.7, 0.9, 0.55]).unwrap().to_pool();
        let truth = GroundTruth::with_proportions(500, 2, None).unwrap();
        let labels = generate_labels(&pool, &truth, 8).unwrap();
        let post = em_e_step(&labels, &EstimatedPool::new(pool.clone()).unwrap(), &[0.5, 0.5]).unwrap();
        assert_eq!(post.argmax(), oracle_mle(&labels, &pool).unwrap());
    }

    #[test]
    fn m_step_hard_truth_noiseless() {
        let truth = GroundTruth::new(vec![1, 1, 1, 2, 3, 3]).unwrap();
        let labels = LabelMatrix::from_rows(3, vec![truth.labels().to_vec()]).unwrap();
        let post = PosteriorMatrix::from_hard(&truth, 3).unwrap();
        let est = em_m_step(&labels, &post, 0.5).unwrap();
        let w = est.pool().worker(0);
        for (g, n_g) in [(1, 3.0), (2, 1.0), (3, 2.0)] {
            assert!((w.prob(g, g) - (n_g + 0.5) / (n_g + 1.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn m_step_uniform_posterior_rows_equal_marginal() {
        let labels = LabelMatrix::from_rows(2, vec![vec![1, 2, 2, 2], vec![1, 1, 1, 2]]).unwrap();
        let post = PosteriorMatrix::uniform(2, 4).unwrap();
        let est = em_m_step(&labels, &post, 0.5).unwrap();
        let w = est.pool().worker(0);
        assert_eq!(w.row(1), w.row(2));
        // counts (0.5, 1.5) + 0.5 over 2 + 1
        assert!((w.prob(1, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_posterior() {
        let labels = LabelMatrix::from_rows(2, vec![vec![1, 2]]).unwrap();
        let post = PosteriorMatrix::uniform(2, 3).unwrap();
        assert!(em_m_step(&labels, &post, 0.5).is_err());
        let est = EstimatedPool::new(OneCoinPool::uniform(0.7, 1).unwrap().to_pool()).unwrap();
        assert!(em_e_step(&labels, &est, &[0.2, 0.2]).is_err());
    }
}
