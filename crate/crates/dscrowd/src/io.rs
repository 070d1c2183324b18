//! File formats: label/truth CSV, pool and config JSON, result tables.
//!
//! Floats are written in shortest round-trip form and every file ends with
//! a newline.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use dscrowd_core::{
    ConfusionMatrix, EmOptions, ExperimentConfig, ExperimentResult, ExponentReport, FitIssue, GroundTruth, Label,
    LabelMatrix, PoolSpec, Rule, SampleSizeReport, WorkerPool,
};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("{}: cannot open", path.display()))?;
    Ok(BufReader::new(file))
}

/// Writes `bytes` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("{}: cannot create", p.display()))?);
            w.write_all(bytes)
                .and_then(|_| w.flush())
                .with_context(|| format!("{}: write failed", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn integer_rows<R: Read>(reader: R) -> Result<Vec<Vec<Label>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("line {}", line + 1))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<Label>()
                    .map_err(|_| anyhow!("line {}, column {}: {field:?} is not a label", line + 1, col + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn integer_row_csv(rows: impl Iterator<Item = impl AsRef<[Label]>>) -> Vec<u8> {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for x in row.as_ref() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Reads an `m x n` label CSV. `k` defaults to the largest label seen
/// (at least 2).
pub fn parse_labels<R: Read>(reader: R, k: Option<usize>) -> Result<LabelMatrix> {
    let rows = integer_rows(reader)?;
    if rows.is_empty() {
        bail!("no label rows");
    }
    let seen = rows.iter().flatten().copied().max().unwrap_or(0) as usize;
    let k = k.unwrap_or(seen.max(2));
    Ok(LabelMatrix::from_rows(k, rows)?)
}

pub fn read_labels(path: &Path, k: Option<usize>) -> Result<LabelMatrix> {
    parse_labels(open(path)?, k).with_context(|| format!("{}", path.display()))
}

pub fn labels_csv(labels: &LabelMatrix) -> Vec<u8> {
    integer_row_csv(labels.rows())
}

pub fn parse_truth<R: Read>(reader: R) -> Result<GroundTruth> {
    let rows = integer_rows(reader)?;
    match rows.len() {
        1 => Ok(GroundTruth::new(rows.into_iter().next().unwrap())?),
        0 => bail!("no truth row"),
        n => bail!("expected a single row of labels, found {n} rows"),
    }
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    parse_truth(open(path)?).with_context(|| format!("{}", path.display()))
}

pub fn truth_csv(truth: &GroundTruth) -> Vec<u8> {
    integer_row_csv(std::iter::once(truth.labels()))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

type PoolFile = Vec<Vec<Vec<f64>>>;

fn pool_from_rows(workers: PoolFile) -> Result<WorkerPool> {
    let workers = workers
        .into_iter()
        .enumerate()
        .map(|(i, rows)| ConfusionMatrix::new(rows).with_context(|| format!("worker {}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WorkerPool::new(workers)?)
}

fn pool_rows(pool: &WorkerPool) -> PoolFile {
    pool.workers().iter().map(ConfusionMatrix::to_rows).collect()
}

pub fn parse_pool<R: Read>(reader: R) -> Result<WorkerPool> {
    pool_from_rows(serde_json::from_reader(reader)?)
}

pub fn read_pool(path: &Path) -> Result<WorkerPool> {
    parse_pool(open(path)?).with_context(|| format!("{}", path.display()))
}

pub fn pool_json(pool: &WorkerPool) -> Vec<u8> {
    json_bytes(&pool_rows(pool))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolSpecFile {
    Explicit(PoolFile),
    OneCoin { p: Vec<f64> },
    OneCoinUniform { low: f64, high: f64 },
}

impl PoolSpecFile {
    pub fn into_spec(self) -> Result<PoolSpec> {
        let spec = match self {
            PoolSpecFile::Explicit(rows) => PoolSpec::Explicit(pool_from_rows(rows)?),
            PoolSpecFile::OneCoin { p } => PoolSpec::OneCoin(p),
            PoolSpecFile::OneCoinUniform { low, high } => PoolSpec::OneCoinUniform { low, high },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &PoolSpec) -> Self {
        match spec {
            PoolSpec::Explicit(pool) => PoolSpecFile::Explicit(pool_rows(pool)),
            PoolSpec::OneCoin(p) => PoolSpecFile::OneCoin { p: p.clone() },
            PoolSpec::OneCoinUniform { low, high } => PoolSpecFile::OneCoinUniform { low: *low, high: *high },
        }
    }
}

pub fn read_pool_spec(path: &Path) -> Result<PoolSpec> {
    let file: PoolSpecFile = serde_json::from_reader(open(path)?).with_context(|| format!("{}", path.display()))?;
    file.into_spec().with_context(|| format!("{}", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmFile {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_max_iters() -> usize {
    EmOptions::default().max_iters
}
fn default_tol() -> f64 {
    EmOptions::default().tol
}
fn default_smoothing() -> f64 {
    EmOptions::default().smoothing
}

/// Experiment config as stored on disk. `seed` falls back to the command
/// line value when absent.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub pool: PoolSpecFile,
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub trials: usize,
    pub rules: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<EmFile>,
}

impl ConfigFile {
    pub fn into_config(self, default_seed: u64) -> Result<ExperimentConfig> {
        let rules = self
            .rules
            .iter()
            .map(|r| r.parse::<Rule>())
            .collect::<Result<Vec<_>, _>>()?;
        let em = self.em.map_or_else(EmOptions::default, |e| EmOptions {
            max_iters: e.max_iters,
            tol: e.tol,
            smoothing: e.smoothing,
        });
        let config = ExperimentConfig {
            pool: self.pool.into_spec()?,
            m_grid: self.m_grid,
            n: self.n,
            trials: self.trials,
            rules,
            seed: self.seed.unwrap_or(default_seed),
            class_weights: self.class_weights,
            em,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_config(config: &ExperimentConfig) -> Self {
        ConfigFile {
            pool: PoolSpecFile::from_spec(&config.pool),
            m_grid: config.m_grid.clone(),
            n: config.n,
            trials: config.trials,
            rules: config.rules.iter().map(|r| r.name().to_string()).collect(),
            seed: Some(config.seed),
            class_weights: config.class_weights.clone(),
            em: Some(EmFile {
                max_iters: config.em.max_iters,
                tol: config.em.tol,
                smoothing: config.em.smoothing,
            }),
        }
    }
}

pub fn read_config(path: &Path, default_seed: u64) -> Result<ExperimentConfig> {
    let file: ConfigFile = serde_json::from_reader(open(path)?).with_context(|| format!("{}", path.display()))?;
    file.into_config(default_seed)
        .with_context(|| format!("{}", path.display()))
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const RESULT_COLUMNS: [&str; 8] = [
    "rule",
    "m",
    "trials",
    "n",
    "mean_error",
    "std_error",
    "predicted_exponent",
    "fitted_slope",
];

/// One row per (rule, m); `fitted_slope` repeats the rule's fit and is
/// empty when no fit was possible.
pub fn result_csv(result: &ExperimentResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULT_COLUMNS)?;
    for row in &result.rows {
        let slope = result.fit(row.rule).and_then(|f| f.slope);
        w.write_record([
            row.rule.name().to_string(),
            row.m.to_string(),
            row.trials.to_string(),
            row.n.to_string(),
            fmt_f64(row.mean_error),
            fmt_f64(row.std_error),
            opt_f64(row.predicted_exponent),
            opt_f64(slope),
        ])?;
    }
    Ok(w.into_inner()?)
}

#[derive(Debug, Serialize)]
struct FitSummary {
    rule: &'static str,
    fitted_slope: Option<f64>,
    points_used: usize,
    issue: Option<&'static str>,
    errors: Vec<u64>,
}

#[derive(Debug, Serialize)]
struct ExperimentSummary {
    config: ConfigFile,
    fits: Vec<FitSummary>,
}

pub fn summary_json(config: &ExperimentConfig, result: &ExperimentResult) -> Vec<u8> {
    let fits = result
        .fits
        .iter()
        .map(|f| FitSummary {
            rule: f.rule.name(),
            fitted_slope: f.slope,
            points_used: f.points_used,
            issue: f.issue.map(|i| match i {
                FitIssue::AllZero => "all-zero",
                FitIssue::TooFewPoints => "too-few-points",
            }),
            errors: result
                .rows
                .iter()
                .filter(|r| r.rule == f.rule)
                .map(|r| r.errors)
                .collect(),
        })
        .collect();
    json_bytes(&ExperimentSummary {
        config: ConfigFile::from_config(config),
        fits,
    })
}

#[derive(Debug, Serialize)]
struct PairFile {
    g: Label,
    h: Label,
    t_star: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct ExponentFile {
    i_pi: f64,
    pairs: Vec<PairFile>,
    argmin_pair: [Label; 2],
    rho_m: f64,
    expert_set_size: usize,
}

pub fn exponent_json(report: &ExponentReport) -> Vec<u8> {
    json_bytes(&ExponentFile {
        i_pi: report.i_pi,
        pairs: report
            .pairs
            .iter()
            .map(|p| PairFile {
                g: p.g,
                h: p.h,
                t_star: p.t_star,
                value: p.value,
            })
            .collect(),
        argmin_pair: [report.argmin_pair.0, report.argmin_pair.1],
        rho_m: report.rho_m,
        expert_set_size: report.expert_set_size,
    })
}

#[derive(Debug, Serialize)]
struct SampleSizeFile {
    i_pi: f64,
    epsilon: f64,
    n: usize,
    m_star: usize,
    m_used: usize,
    trials: usize,
    within_target: usize,
    perfect: usize,
    fraction_within_target: f64,
    fraction_perfect: f64,
    mean_error: f64,
}

pub fn sample_size_json(report: &SampleSizeReport) -> Vec<u8> {
    json_bytes(&SampleSizeFile {
        i_pi: report.i_pi,
        epsilon: report.epsilon,
        n: report.n,
        m_star: report.m_star,
        m_used: report.m_used,
        trials: report.trials,
        within_target: report.within_target,
        perfect: report.perfect,
        fraction_within_target: report.fraction_within_target(),
        fraction_perfect: report.fraction_perfect(),
        mean_error: report.mean_error,
    })
}
