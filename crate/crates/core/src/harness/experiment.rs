use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{fit::fit_exponent, trial_seed, PoolSpec};
use crate::aggregate::{
    em_run, majority_vote, one_coin_estimate, oracle_mle, plugin_mle, EmOptions, PosteriorMatrix, Rule,
};
use crate::error::{validation, Result};
use crate::exponent::{majority_vote_exponent, minimax_exponent};
use crate::math::sqrt;
use crate::model::{count_errors, generate_labels, GroundTruth, LabelMatrix, WorkerPool};

/// Grid points with fewer observed misclassifications are left out of the
/// slope fit.
pub const MIN_ERRORS_FOR_FIT: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pool: PoolSpec,
    pub m_grid: Vec<usize>,
    /// Items per trial.
    pub n: usize,
    pub trials: usize,
    pub rules: Vec<Rule>,
    pub seed: u64,
    /// Share of items per true class; uniform when `None`.
    pub class_weights: Option<Vec<f64>>,
    pub em: EmOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.pool.validate()?;
        if self.m_grid.is_empty() || self.m_grid[0] == 0 || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(validation(
                "m_grid must be a non-empty, strictly ascending list of positive worker counts",
            ));
        }
        if self.n == 0 || self.trials == 0 {
            return Err(validation("n and trials must be at least 1"));
        }
        if self.rules.is_empty() {
            return Err(validation("at least one rule is required"));
        }
        if self.rules.contains(&Rule::PluginMle) {
            return Err(validation(
                "experiments cannot run the plugin rule without an estimate; use onecoin-plugin or em",
            ));
        }
        if self.rules.contains(&Rule::OneCoinPlugin) && self.pool.k() != 2 {
            return Err(validation("onecoin-plugin needs a two-label pool"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub rule: Rule,
    pub m: usize,
    pub trials: usize,
    pub n: usize,
    pub errors: u64,
    pub mean_error: f64,
    /// Binomial standard error over all `n * trials` items.
    pub std_error: f64,
    /// `I(pi)` for likelihood-type rules, `J(p)` for majority vote on a
    /// one-coin pool, `None` when not defined.
    pub predicted_exponent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitIssue {
    /// No misclassification at any `m`.
    AllZero,
    /// Fewer than three grid points with enough errors.
    TooFewPoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleFit {
    pub rule: Rule,
    pub slope: Option<f64>,
    pub points_used: usize,
    pub issue: Option<FitIssue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Grouped by rule (config order), then ascending `m`.
    pub rows: Vec<ResultRow>,
    pub fits: Vec<RuleFit>,
}

impl ExperimentResult {
    pub fn row(&self, rule: Rule, m: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.rule == rule && r.m == m)
    }

    pub fn fit(&self, rule: Rule) -> Option<&RuleFit> {
        self.fits.iter().find(|f| f.rule == rule)
    }
}

/// A validated experiment; trials can be run in any order or in parallel
/// and combined with [`Experiment::finish`].
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    truth: GroundTruth,
    pools: Vec<WorkerPool>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let k = config.pool.k();
        let truth = GroundTruth::with_proportions(config.n, k, config.class_weights.as_deref())?;
        let pools = config
            .m_grid
            .iter()
            .map(|&m| config.pool.prefix(m, config.seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Experiment { config, truth, pools })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Worker pool at grid position `m_index`.
    pub fn pool(&self, m_index: usize) -> &WorkerPool {
        &self.pools[m_index]
    }

    /// Simulated labels for one trial at grid position `m_index`.
    pub fn labels(&self, m_index: usize, trial: usize) -> Result<LabelMatrix> {
        generate_labels(&self.pools[m_index], &self.truth, trial_seed(self.config.seed, trial))
    }

    /// Misclassification counts per rule (config order) for one trial.
    pub fn run_trial(&self, m_index: usize, trial: usize) -> Result<Vec<u64>> {
        let labels = self.labels(m_index, trial)?;
        let pool = &self.pools[m_index];
        self.config
            .rules
            .iter()
            .map(|&rule| {
                let estimate = apply_rule(rule, &labels, pool, &self.config.em)?;
                Ok(count_errors(estimate.labels(), self.truth.labels()) as u64)
            })
            .collect()
    }

    /// Assembles per-trial counts `counts[m_index][trial][rule]`.
    pub fn finish(&self, counts: &[Vec<Vec<u64>>]) -> Result<ExperimentResult> {
        let cfg = &self.config;
        if counts.len() != cfg.m_grid.len()
            || counts
                .iter()
                .any(|c| c.len() != cfg.trials || c.iter().any(|t| t.len() != cfg.rules.len()))
        {
            return Err(validation("trial counts do not match the experiment shape"));
        }
        let items = (cfg.n * cfg.trials) as f64;
        let predictions: Vec<(Option<f64>, Option<f64>)> = self.pools.iter().map(predictions_for).collect();
        let mut rows = Vec::with_capacity(cfg.rules.len() * cfg.m_grid.len());
        let mut fits = Vec::with_capacity(cfg.rules.len());
        for (r, &rule) in cfg.rules.iter().enumerate() {
            let mut points = Vec::new();
            let mut any_error = false;
            for (mi, &m) in cfg.m_grid.iter().enumerate() {
                let errors: u64 = counts[mi].iter().map(|t| t[r]).sum();
                let mean_error = errors as f64 / items;
                any_error |= errors > 0;
                if errors >= MIN_ERRORS_FOR_FIT {
                    points.push((m as f64, mean_error));
                }
                let (i_pi, j_p) = predictions[mi];
                rows.push(ResultRow {
                    rule,
                    m,
                    trials: cfg.trials,
                    n: cfg.n,
                    errors,
                    mean_error,
                    std_error: sqrt(mean_error * (1.0 - mean_error) / items),
                    predicted_exponent: if rule == Rule::MajorityVote { j_p } else { i_pi },
                });
            }
            let slope = fit_exponent(&points).ok();
            let issue = match (slope, any_error) {
                (Some(_), _) => None,
                (None, false) => Some(FitIssue::AllZero),
                (None, true) => Some(FitIssue::TooFewPoints),
            };
            fits.push(RuleFit {
                rule,
                slope,
                points_used: points.len(),
                issue,
            });
        }
        Ok(ExperimentResult { rows, fits })
    }
}

/// `(I(pi), J(p))` for a pool; either is `None` where it is undefined.
fn predictions_for(pool: &WorkerPool) -> (Option<f64>, Option<f64>) {
    let i_pi = minimax_exponent(pool).ok().map(|r| r.i_pi);
    let j_p = pool
        .as_one_coin()
        .and_then(|p| majority_vote_exponent(&p).ok())
        .map(|j| j.value);
    (i_pi, j_p)
}

/// Runs one aggregation rule on a label matrix; `pool` is the generating
/// pool, used only by the oracle.
pub(crate) fn apply_rule(rule: Rule, labels: &LabelMatrix, pool: &WorkerPool, em: &EmOptions) -> Result<GroundTruth> {
    match rule {
        Rule::MajorityVote => majority_vote(labels),
        Rule::OracleMle => oracle_mle(labels, pool),
        Rule::Em => {
            let init = PosteriorMatrix::from_majority(labels)?;
            em_run(labels, &init, em).map(|out| out.labels)
        }
        Rule::OneCoinPlugin => {
            let est = one_coin_estimate(labels)?;
            plugin_mle(labels, &est.to_estimate())
        }
        Rule::PluginMle => Err(validation(format!("rule {rule} needs an explicit estimate"))),
    }
}

/// Serial reference run; parallel runners must reproduce it exactly.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let experiment = Experiment::new(config.clone())?;
    let mut counts = vec![Vec::with_capacity(config.trials); config.m_grid.len()];
    for (mi, per_m) in counts.iter_mut().enumerate() {
        for t in 0..config.trials {
            per_m.push(experiment.run_trial(mi, t)?);
        }
    }
    experiment.finish(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(rules: Vec<Rule>) -> ExperimentConfig {
        ExperimentConfig {
            pool: PoolSpec::OneCoin(vec![0.7]),
            m_grid: vec![1, 3, 5, 7],
            n: 400,
            trials: 2,
            rules,
            seed: 3,
            class_weights: None,
            em: EmOptions::default(),
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let cfg = config(vec![Rule::MajorityVote, Rule::OracleMle]);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 8);
        for row in &a.rows {
            assert!((0.0..=1.0).contains(&row.mean_error));
            assert!(row.std_error >= 0.0);
        }
        // equal accuracies: both rules see the same data and decide alike
        for m in [1, 3, 5, 7] {
            assert_eq!(
                a.row(Rule::MajorityVote, m).unwrap().errors,
                a.row(Rule::OracleMle, m).unwrap().errors
            );
        }
        assert!(a.fit(Rule::OracleMle).unwrap().slope.unwrap() < 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = config(vec![Rule::PluginMle]);
        assert!(Experiment::new(cfg.clone()).is_err());
        cfg.rules = vec![Rule::MajorityVote];
        cfg.m_grid = vec![3, 3];
        assert!(Experiment::new(cfg.clone()).is_err());
        cfg.m_grid = vec![];
        assert!(Experiment::new(cfg.clone()).is_err());
        cfg.m_grid = vec![1];
        cfg.trials = 0;
        assert!(Experiment::new(cfg).is_err());
    }

    #[test]
    fn noiseless_pool_flags_zero_errors() {
        let mut cfg = config(vec![Rule::MajorityVote]);
        cfg.pool = PoolSpec::OneCoin(vec![1.0]);
        let res = run_experiment(&cfg).unwrap();
        let fit = res.fit(Rule::MajorityVote).unwrap();
        assert_eq!(fit.slope, None);
        assert_eq!(fit.issue, Some(FitIssue::AllZero));
    }
}
