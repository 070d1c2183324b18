//! Label-aggregation rules.
//!
//! Per-column rules ([`MajorityRule`], [`LikelihoodRule`]) implement
//! [`ColumnRule`] so the exact-enumeration harness can evaluate them on
//! single label columns. EM and the one-coin plug-in estimate parameters
//! from the whole matrix first.

mod em;
mod likelihood;
mod majority;
mod one_coin;
mod smoothing;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{domain, validation, Error, Result};
use crate::model::{GroundTruth, Label, LabelMatrix, WorkerPool};

pub use em::{em_e_step, em_m_step, em_run, log_likelihood, EmOptions, EmOutcome};
pub use likelihood::{oracle_mle, plugin_mle, LikelihoodRule};
pub use majority::{majority_vote, MajorityRule};
pub use one_coin::{one_coin_estimate, OneCoinEstimate, DEGENERACY_THRESHOLD};
pub use smoothing::smooth_confusion;

/// Aggregation rules by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    MajorityVote,
    OracleMle,
    PluginMle,
    Em,
    OneCoinPlugin,
}

impl Rule {
    pub const ALL: [Rule; 5] = [
        Rule::MajorityVote,
        Rule::OracleMle,
        Rule::PluginMle,
        Rule::Em,
        Rule::OneCoinPlugin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::MajorityVote => "mv",
            Rule::OracleMle => "oracle",
            Rule::PluginMle => "plugin",
            Rule::Em => "em",
            Rule::OneCoinPlugin => "onecoin-plugin",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| {
            validation(format!(
                "unknown rule {s:?} (expected mv, oracle, plugin, em or onecoin-plugin)"
            ))
        })
    }
}

/// A decision rule that labels one item from its column of worker labels.
pub trait ColumnRule {
    fn k(&self) -> usize;

    /// Number of workers the rule expects per column.
    fn m(&self) -> usize;

    fn decide(&self, column: &[Label]) -> Label;

    fn apply(&self, labels: &LabelMatrix) -> Result<GroundTruth> {
        labels.require_complete()?;
        if labels.m() != self.m() {
            return Err(validation(format!(
                "rule expects {} workers, labels have {}",
                self.m(),
                labels.m()
            )));
        }
        if labels.k() > self.k() {
            return Err(validation(format!(
                "labels use k = {}, rule expects {}",
                labels.k(),
                self.k()
            )));
        }
        let mut column = vec![0; labels.m()];
        let decided = (0..labels.n())
            .map(|j| {
                labels.column_into(j, &mut column);
                self.decide(&column)
            })
            .collect();
        GroundTruth::new(decided)
    }
}

/// Index of the largest score, first one on ties, as a 1-based label.
#[inline]
pub(crate) fn argmax_label(scores: &[f64]) -> Label {
    let mut best = 0;
    for (g, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = g;
        }
    }
    best as Label + 1
}

/// A confusion-matrix estimate with strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedPool(WorkerPool);

impl EstimatedPool {
    pub fn new(pool: WorkerPool) -> Result<Self> {
        if pool.min_entry() <= 0.0 {
            return Err(domain(
                "estimated confusion matrices must be strictly positive; smooth them first",
            ));
        }
        Ok(EstimatedPool(pool))
    }

    pub fn pool(&self) -> &WorkerPool {
        &self.0
    }

    pub fn into_pool(self) -> WorkerPool {
        self.0
    }
}

const POSTERIOR_SUM_TOL: f64 = 1e-9;

/// Soft label assignment: `probs[j][g] = P(y_j = g)`, stored item-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    k: usize,
    n: usize,
    probs: Vec<f64>,
}

impl PosteriorMatrix {
    pub fn new(k: usize, n: usize, probs: Vec<f64>) -> Result<Self> {
        if k < 2 || n == 0 || probs.len() != k * n {
            return Err(validation(format!(
                "posterior needs {n} x {k} = {} entries, got {}",
                n * k,
                probs.len()
            )));
        }
        for (j, row) in probs.chunks_exact(k).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(validation(format!(
                    "posterior row {} has entries outside [0, 1]",
                    j + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > POSTERIOR_SUM_TOL {
                return Err(validation(format!("posterior row {} sums to {sum}", j + 1)));
            }
        }
        Ok(PosteriorMatrix { k, n, probs })
    }

    pub fn uniform(k: usize, n: usize) -> Result<Self> {
        Self::new(k, n, vec![1.0 / k as f64; k * n])
    }

    /// Point mass on each given label.
    pub fn from_hard(labels: &GroundTruth, k: usize) -> Result<Self> {
        Self::from_soft_hard(labels, k, 1.0)
    }

    /// Mass `winner` on each given label, the rest spread evenly.
    pub fn from_soft_hard(labels: &GroundTruth, k: usize, winner: f64) -> Result<Self> {
        labels.check_k(k)?;
        if !(0.0..=1.0).contains(&winner) {
            return Err(validation(format!("winner mass {winner} outside [0, 1]")));
        }
        let rest = (1.0 - winner) / (k - 1) as f64;
        let mut probs = vec![rest; k * labels.n()];
        for (row, &y) in probs.chunks_exact_mut(k).zip(labels.labels()) {
            row[y as usize - 1] = winner;
        }
        Self::new(k, labels.n(), probs)
    }

    /// Default EM start: majority vote with winner mass 0.9.
    pub fn from_majority(labels: &LabelMatrix) -> Result<Self> {
        let mv = majority_vote(labels)?;
        Self::from_soft_hard(&mv, labels.k(), 0.9)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, item: usize) -> &[f64] {
        &self.probs[item * self.k..(item + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.k)
    }

    /// Hard labels `argmax_g P(y_j = g)`, smallest label on ties.
    pub fn argmax(&self) -> GroundTruth {
        GroundTruth::new(self.rows().map(argmax_label).collect()).expect("n >= 1, labels >= 1")
    }

    /// Column permutation: class `g` becomes `perm[g - 1]`.
    pub fn relabeled(&self, perm: &[Label]) -> Result<Self> {
        crate::model::check_permutation(perm, self.k)?;
        let mut probs = vec![0.0; self.probs.len()];
        for (dst, src) in probs.chunks_exact_mut(self.k).zip(self.rows()) {
            for (g, &p) in src.iter().enumerate() {
                dst[perm[g] as usize - 1] = p;
            }
        }
        Self::new(self.k, self.n, probs)
    }
}
