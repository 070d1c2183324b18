//! Dawid-Skene crowdsourcing: label aggregation rules, Chernoff-type error
//! exponents and the experiment machinery used to check them.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, threads or a terminal lives in the `dscrowd` companion crate.
//!
//! Labels are 1-based (`1..=k`) throughout the public API; `0` is reserved
//! for a missing label in a [`LabelMatrix`].

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod aggregate;
pub mod error;
pub mod exponent;
pub mod harness;
mod math;
pub mod model;
pub mod optimize;
pub mod rng;

pub use aggregate::{
    em_e_step, em_m_step, em_run, majority_vote, one_coin_estimate, oracle_mle, plugin_mle, smooth_confusion,
    ColumnRule, EmOptions, EmOutcome, EstimatedPool, LikelihoodRule, MajorityRule, OneCoinEstimate, PosteriorMatrix,
    Rule,
};
pub use error::{Error, Result};
pub use exponent::{
    chernoff_pair, log_bt, majority_vote_exponent, minimax_exponent, one_coin_exponent, required_workers,
    ExponentReport, MajorityExponent, PairChernoff,
};
pub use harness::{
    column_rule, exact_error, fit_exponent, run_experiment, union_upper_bound, verify_sample_size, Experiment,
    ExperimentConfig, ExperimentResult, FitIssue, PoolSpec, ResultRow, RuleFit, SampleSizeReport,
};
pub use model::{
    generate_labels, misclassification_rate, remap_missing, ConfusionMatrix, GroundTruth, Label, LabelMatrix,
    OneCoinPool, WorkerPool, MISSING,
};
