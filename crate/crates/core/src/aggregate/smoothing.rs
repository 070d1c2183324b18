use alloc::format;
use alloc::vec::Vec;

use super::EstimatedPool;
use crate::error::{validation, Result};
use crate::model::{ConfusionMatrix, WorkerPool};

/// Additive smoothing of per-worker `k x k` count grids (row-major):
/// `pi_gh = (count_gh + lambda) / (sum_h count_gh + k * lambda)`.
pub fn smooth_confusion(k: usize, counts: &[Vec<f64>], lambda: f64) -> Result<EstimatedPool> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(validation(format!("smoothing weight must be positive, got {lambda}")));
    }
    let workers = counts
        .iter()
        .enumerate()
        .map(|(i, grid)| {
            if grid.len() != k * k {
                return Err(validation(format!(
                    "worker {} count grid has {} entries, expected {}",
                    i + 1,
                    grid.len(),
                    k * k
                )));
            }
            if grid.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(validation(format!(
                    "worker {} has a negative or non-finite count",
                    i + 1
                )));
            }
            let mut data = Vec::with_capacity(k * k);
            for row in grid.chunks_exact(k) {
                let denom: f64 = row.iter().sum::<f64>() + k as f64 * lambda;
                data.extend(row.iter().map(|c| (c + lambda) / denom));
            }
            ConfusionMatrix::from_flat(k, data)
        })
        .collect::<Result<Vec<_>>>()?;
    EstimatedPool::new(WorkerPool::new(workers)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_counts_give_uniform_rows() {
        let est = smooth_confusion(3, &[vec![0.0; 9]], 1.0).unwrap();
        for row in est.pool().worker(0).rows() {
            for &p in row {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn direct_arithmetic() {
        let est = smooth_confusion(2, &[vec![8.0, 0.0, 0.0, 0.0]], 0.5).unwrap();
        let w = est.pool().worker(0);
        assert!((w.prob(1, 1) - 8.5 / 9.0).abs() < 1e-15);
        assert!((w.prob(1, 2) - 0.5 / 9.0).abs() < 1e-15);
        assert_eq!(w.prob(2, 1), 0.5);
    }

    #[test]
    fn vanishing_lambda_recovers_frequencies() {
        let est = smooth_confusion(2, &[vec![3.0, 1.0, 2.0, 6.0]], 1e-12).unwrap();
        let w = est.pool().worker(0);
        assert!((w.prob(1, 1) - 0.75).abs() < 1e-10);
        assert!((w.prob(2, 2) - 0.75).abs() < 1e-10);
        assert!(w.min_entry() > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(smooth_confusion(2, &[vec![0.0; 4]], 0.0).is_err());
        assert!(smooth_confusion(2, &[vec![0.0; 3]], 1.0).is_err());
        assert!(smooth_confusion(2, &[vec![-1.0, 0.0, 0.0, 0.0]], 1.0).is_err());
    }
}
