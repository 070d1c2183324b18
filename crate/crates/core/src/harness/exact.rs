use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::aggregate::{ColumnRule, EstimatedPool, LikelihoodRule, MajorityRule, Rule};
use crate::error::{validation, Error, Result};
use crate::exponent::minimax_exponent;
use crate::math::{exp, ln};
use crate::model::{Label, WorkerPool};

/// Largest number of label columns `k^m` exact enumeration will visit.
pub const EXACT_COLUMN_LIMIT: u64 = 10_000_000;

/// A per-column decision rule by name. `Plugin` needs `estimate`; `Em` and
/// `OneCoinPlugin` fit parameters to a whole matrix and have no per-column
/// form.
pub fn column_rule(rule: Rule, pool: &WorkerPool, estimate: Option<&EstimatedPool>) -> Result<Box<dyn ColumnRule>> {
    match rule {
        Rule::MajorityVote => Ok(Box::new(MajorityRule::new(pool.k(), pool.m()))),
        Rule::OracleMle => Ok(Box::new(LikelihoodRule::new(pool)?)),
        Rule::PluginMle => {
            let est = estimate.ok_or_else(|| validation("the plugin rule needs an estimated pool"))?;
            Ok(Box::new(LikelihoodRule::new(est.pool())?))
        }
        Rule::Em | Rule::OneCoinPlugin => Err(validation(format!("rule {rule} is not a fixed per-column rule"))),
    }
}

/// Exact `P(rule(column) != true_label)` when the column is drawn from
/// `pool` given `true_label`.
///
/// Visits all `k^m` columns in mixed-radix order (last worker fastest),
/// keeping prefix log-probabilities so each step only recomputes the
/// workers whose label changed.
pub fn exact_error(pool: &WorkerPool, rule: &dyn ColumnRule, true_label: Label) -> Result<f64> {
    let (k, m) = (pool.k(), pool.m());
    if true_label == 0 || true_label as usize > k {
        return Err(validation(format!("true label {true_label} outside 1..={k}")));
    }
    if rule.m() != m || rule.k() < k {
        return Err(validation(format!(
            "rule is for {} workers and k = {}, pool has {m} workers and k = {k}",
            rule.m(),
            rule.k()
        )));
    }
    let columns = libm::pow(k as f64, m as f64);
    if columns > EXACT_COLUMN_LIMIT as f64 {
        return Err(Error::Infeasible {
            columns,
            limit: EXACT_COLUMN_LIMIT,
        });
    }
    let log_rows: Vec<Vec<f64>> = pool
        .workers()
        .iter()
        .map(|w| w.row(true_label).iter().map(|&p| ln(p)).collect())
        .collect();

    let mut column: Vec<Label> = vec![1; m];
    let mut prefix = vec![0.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] + log_rows[i][0];
    }
    // Neumaier-compensated sum of misclassified column probabilities
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    loop {
        if rule.decide(&column) != true_label {
            let p = exp(prefix[m]);
            let t = sum + p;
            comp += if sum.abs() >= p { (sum - t) + p } else { (p - t) + sum };
            sum = t;
        }
        let mut pos = m;
        while pos > 0 && column[pos - 1] as usize == k {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        column[pos - 1] += 1;
        for slot in &mut column[pos..] {
            *slot = 1;
        }
        for i in pos - 1..m {
            prefix[i + 1] = prefix[i] + log_rows[i][column[i] as usize - 1];
        }
    }
    Ok((sum + comp).clamp(0.0, 1.0))
}

/// Per-item union bound `(k - 1) exp(-m I(pi))` for the likelihood rule.
pub fn union_upper_bound(pool: &WorkerPool) -> Result<f64> {
    let report = minimax_exponent(pool)?;
    Ok((pool.k() - 1) as f64 * exp(-(pool.m() as f64) * report.i_pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConfusionMatrix, OneCoinPool};

    #[test]
    fn majority_three_workers() {
        let pool = OneCoinPool::new(vec![0.8, 0.7, 0.6]).unwrap().to_pool();
        let rule = MajorityRule::new(2, 3);
        for y in [1, 2] {
            let e = exact_error(&pool, &rule, y).unwrap();
            assert!((e - 0.212).abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn single_worker_likelihood() {
        let w = ConfusionMatrix::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3], vec![0.25, 0.25, 0.5]]).unwrap();
        let pool = WorkerPool::new(vec![w]).unwrap();
        let rule = LikelihoodRule::new(&pool).unwrap();
        assert!((exact_error(&pool, &rule, 1).unwrap() - 0.3).abs() < 1e-12);
        assert!((exact_error(&pool, &rule, 2).unwrap() - 0.4).abs() < 1e-12);
        assert!((exact_error(&pool, &rule, 3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_mismatch() {
        let pool = OneCoinPool::uniform(0.7, 24).unwrap().to_pool();
        let rule = MajorityRule::new(2, 24);
        assert!(matches!(exact_error(&pool, &rule, 1), Err(Error::Infeasible { .. })));
        let small = OneCoinPool::uniform(0.7, 3).unwrap().to_pool();
        assert!(exact_error(&small, &rule, 1).is_err());
        assert!(exact_error(&small, &MajorityRule::new(2, 3), 3).is_err());
    }

    #[test]
    fn column_rules_by_name() {
        let pool = OneCoinPool::uniform(0.7, 3).unwrap().to_pool();
        assert!(column_rule(Rule::Em, &pool, None).is_err());
        assert!(column_rule(Rule::PluginMle, &pool, None).is_err());
        assert!(column_rule(Rule::OracleMle, &pool, None).is_ok());
    }
}
