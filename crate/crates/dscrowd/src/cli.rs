//! Command-line interface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dscrowd_core::{
    column_rule, em_run, exact_error, majority_vote, minimax_exponent, one_coin_estimate, oracle_mle, plugin_mle,
    remap_missing, union_upper_bound, EmOptions, EstimatedPool, GroundTruth, Label, PoolSpec, PosteriorMatrix, Rule,
};

use crate::{io, parallel};

#[derive(Debug, Parser)]
#[command(
    name = "dscrowd",
    version,
    about = "Dawid-Skene crowdsourcing: simulation, aggregation and error exponents"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a label matrix from a worker pool and ground truth.
    Simulate {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise Chernoff exponents and I(pi) of a worker pool.
    Exponent {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate true labels from a label matrix.
    Aggregate(AggregateArgs),
    /// Monte Carlo error rates over a grid of worker counts.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Result table (CSV).
        #[arg(long)]
        out: PathBuf,
        /// JSON summary; defaults to the table path with a `.json` extension.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Exact misclassification probability by enumerating label columns.
    Exact {
        #[arg(long)]
        pool: PathBuf,
        /// mv, oracle or plugin.
        #[arg(long)]
        rule: Rule,
        /// True label of the item; every label when omitted.
        #[arg(long)]
        label: Option<Label>,
        /// Estimated pool used by the plugin rule.
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the worker count needed for a target error rate.
    VerifySampleSize(SampleSizeArgs),
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// mv, oracle, plugin, em or onecoin-plugin.
    #[arg(long)]
    pub rule: Rule,
    #[arg(long)]
    pub labels: PathBuf,
    /// True pool for oracle, estimated pool for plugin.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Number of classes; inferred from the pool or the labels otherwise.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = EmOptions::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = EmOptions::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = EmOptions::default().smoothing)]
    pub smoothing: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["p", "spec"]))]
pub struct SampleSizeArgs {
    /// One-coin accuracies, repeated cyclically.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Pool spec JSON, e.g. {"one_coin_uniform": {"low": 0.6, "high": 0.9}}.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Target error rate (default 1/n).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = parallel::thread_pool(cli.threads)?;
    match cli.command {
        Command::Simulate { pool, truth, out } => {
            let pool = io::read_pool(&pool)?;
            let truth = io::read_truth(&truth)?;
            let labels = parallel::generate_labels(&pool, &truth, cli.seed, &threads)?;
            io::emit(out.as_deref(), &io::labels_csv(&labels))
        }
        Command::Exponent { pool, out } => {
            let report = minimax_exponent(&io::read_pool(&pool)?)?;
            io::emit(out.as_deref(), &io::exponent_json(&report))
        }
        Command::Aggregate(args) => aggregate(args),
        Command::Experiment { config, out, summary } => {
            let config = io::read_config(&config, cli.seed)?;
            let started = Instant::now();
            let result = parallel::run_experiment(&config, &threads, |m| {
                eprintln!("m = {m} done ({:.1} s)", started.elapsed().as_secs_f64());
            })?;
            io::emit(Some(&out), &io::result_csv(&result)?)?;
            let summary = summary.unwrap_or_else(|| out.with_extension("json"));
            io::emit(Some(&summary), &io::summary_json(&config, &result))
        }
        Command::Exact {
            pool,
            rule,
            label,
            estimate,
            out,
        } => exact(&pool, rule, label, estimate.as_deref(), out.as_deref()),
        Command::VerifySampleSize(args) => {
            let spec = match (args.p, args.spec) {
                (Some(p), _) => PoolSpec::OneCoin(p),
                (None, Some(path)) => io::read_pool_spec(&path)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            let epsilon = args.epsilon.unwrap_or(1.0 / args.n.max(1) as f64);
            let report = parallel::verify_sample_size(&spec, epsilon, args.n, args.trials, cli.seed, &threads)?;
            io::emit(args.out.as_deref(), &io::sample_size_json(&report))
        }
    }
}

#[derive(Serialize)]
struct Sidecar {
    rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_hat: Option<f64>,
    runtime_ms: f64,
}

fn aggregate(args: AggregateArgs) -> Result<()> {
    let pool = args.pool.as_deref().map(io::read_pool).transpose()?;
    let k = args.k.or(pool.as_ref().map(|p| p.k()));
    let (labels, _) = remap_missing(&io::read_labels(&args.labels, k)?);
    let need_pool = || {
        pool.as_ref()
            .with_context(|| format!("rule {} needs --pool", args.rule))
    };

    let started = Instant::now();
    let (estimate, iters, gamma_hat): (GroundTruth, _, _) = match args.rule {
        Rule::MajorityVote => (majority_vote(&labels)?, None, None),
        Rule::OracleMle => (oracle_mle(&labels, need_pool()?)?, None, None),
        Rule::PluginMle => {
            let est = EstimatedPool::new(need_pool()?.clone())?;
            (plugin_mle(&labels, &est)?, None, None)
        }
        Rule::Em => {
            let options = EmOptions {
                max_iters: args.max_iters,
                tol: args.tol,
                smoothing: args.smoothing,
            };
            let outcome = em_run(&labels, &PosteriorMatrix::from_majority(&labels)?, &options)?;
            (outcome.labels, Some(outcome.iters), None)
        }
        Rule::OneCoinPlugin => {
            let fit = one_coin_estimate(&labels)?;
            (plugin_mle(&labels, &fit.to_estimate())?, None, Some(fit.gamma_hat))
        }
    };
    let sidecar = Sidecar {
        rule: args.rule.name(),
        iters,
        gamma_hat,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    io::emit(args.out.as_deref(), &io::truth_csv(&estimate))?;
    let sidecar = io::json_bytes(&sidecar);
    match &args.out {
        Some(out) => io::emit(Some(&sidecar_path(out)), &sidecar),
        None => {
            eprint!("{}", String::from_utf8_lossy(&sidecar));
            Ok(())
        }
    }
}

/// `yhat.csv` -> `yhat.csv.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct ExactLabel {
    true_label: Label,
    exact_error: f64,
}

#[derive(Serialize)]
struct ExactReport {
    rule: &'static str,
    k: usize,
    m: usize,
    errors: Vec<ExactLabel>,
    /// Average over the reported labels.
    mean_error: f64,
    /// `(k - 1) exp(-m I)`, for pools with strictly positive entries.
    union_bound: Option<f64>,
}

fn exact(pool: &Path, rule: Rule, label: Option<Label>, estimate: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let pool = io::read_pool(pool)?;
    let estimate = estimate
        .map(io::read_pool)
        .transpose()?
        .map(EstimatedPool::new)
        .transpose()?;
    if rule == Rule::PluginMle && estimate.is_none() {
        bail!("rule plugin needs --estimate");
    }
    let decide = column_rule(rule, &pool, estimate.as_ref())?;
    let labels: Vec<Label> = match label {
        Some(g) => vec![g],
        None => (1..=pool.k() as Label).collect(),
    };
    let errors = labels
        .iter()
        .map(|&g| {
            Ok(ExactLabel {
                true_label: g,
                exact_error: exact_error(&pool, decide.as_ref(), g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_error = errors.iter().map(|e| e.exact_error).sum::<f64>() / errors.len() as f64;
    let report = ExactReport {
        rule: rule.name(),
        k: pool.k(),
        m: pool.m(),
        errors,
        mean_error,
        union_bound: union_upper_bound(&pool).ok(),
    };
    io::emit(out, &io::json_bytes(&report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "dscrowd",
            "exponent",
            "--pool",
            "p.json",
            "--seed",
            "7",
            "--threads",
            "2",
        ])
        .unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.threads, Some(2));
    }

    #[test]
    fn unknown_rule_is_a_usage_error() {
        let err = Cli::try_parse_from(["dscrowd", "aggregate", "--rule", "median", "--labels", "x.csv"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sample_size_needs_a_source() {
        assert!(Cli::try_parse_from(["dscrowd", "verify-sample-size", "--n", "10"]).is_err());
        let cli = Cli::try_parse_from(["dscrowd", "verify-sample-size", "--p", "0.8,0.7", "--n", "10"]).unwrap();
        match cli.command {
            Command::VerifySampleSize(a) => assert_eq!(a.p, Some(vec![0.8, 0.7])),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sidecar_appends_extension() {
        assert_eq!(
            sidecar_path(Path::new("out/yhat.csv")),
            PathBuf::from("out/yhat.csv.json")
        );
    }
}
