//! Error-exponent functionals of the Dawid-Skene model.
//!
//! For two truth classes `g != h` the per-worker log moment function
//!
//! ```text
//! f(t) = sum_i ln B_t(i),   B_t(i) = sum_l pi_gl^(1-t) pi_hl^t
//! ```
//!
//! is convex on `[0, 1]` with `f(0) = f(1) = 0`, and strictly convex as soon
//! as one worker separates the two rows. The average Chernoff information is
//! `C(g, h) = -min_t f(t) / m`; the minimax exponent `I(pi)` is its minimum
//! over class pairs.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, validation, Result};
use crate::math::{ceil, exp, ln, log_sum_exp, round, sqrt};
use crate::model::{Label, OneCoinPool, WorkerPool};
use crate::optimize::golden_section;

/// Bracket width at which the golden-section search stops.
pub const SEARCH_TOL: f64 = 1e-10;
/// Lower end of the `t` domain for the majority-vote exponent.
pub const MV_T_MIN: f64 = 1e-6;
/// Margin `alpha` in the expert-set diagnostic.
pub const EXPERT_ALPHA: f64 = 0.01;
/// Rows closer than this in every entry count as indistinguishable.
const SAME_ROW_TOL: f64 = 1e-12;
/// Pairs whose values differ by less than this tie for the argmin.
const ARGMIN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairChernoff {
    pub g: Label,
    pub h: Label,
    /// Minimizer of `f` on `[0, 1]`; `0.5` when the rows coincide.
    pub t_star: f64,
    /// `C(g, h)` in nats per worker.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub i_pi: f64,
    /// All pairs `g < h` in lexicographic order.
    pub pairs: Vec<PairChernoff>,
    pub argmin_pair: (Label, Label),
    /// Smallest confusion entry `rho_m`.
    pub rho_m: f64,
    /// `|A_0.01|` for the argmin pair.
    pub expert_set_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorityExponent {
    pub t_star: f64,
    pub value: f64,
}

fn check_pair(pool: &WorkerPool, g: Label, h: Label) -> Result<()> {
    let k = pool.k() as Label;
    if g == 0 || h == 0 || g > k || h > k {
        return Err(validation(format!("labels ({g}, {h}) outside 1..={k}")));
    }
    Ok(())
}

fn check_positive_rows(pool: &WorkerPool, g: Label, h: Label) -> Result<()> {
    for (i, w) in pool.workers().iter().enumerate() {
        for label in [g, h] {
            if w.row(label).iter().any(|&p| p <= 0.0) {
                return Err(domain(format!(
                    "worker {} has a zero probability in row {label}; smooth the confusion matrices first",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// Log rows of a class pair, laid out worker-major, for repeated `f(t)` calls.
struct PairLogs {
    k: usize,
    log_g: Vec<f64>,
    log_h: Vec<f64>,
}

impl PairLogs {
    fn new(pool: &WorkerPool, g: Label, h: Label) -> Self {
        let collect = |label| {
            pool.workers()
                .iter()
                .flat_map(|w| w.row(label).iter().map(|&p| ln(p)))
                .collect()
        };
        PairLogs {
            k: pool.k(),
            log_g: collect(g),
            log_h: collect(h),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.log_g
            .chunks_exact(self.k)
            .zip(self.log_h.chunks_exact(self.k))
            .map(|(lg, lh)| log_sum_exp(lg.iter().zip(lh).map(|(a, b)| (1.0 - t) * a + t * b)))
            .sum()
    }
}

/// `f(t) = sum_i ln sum_l pi_gl^(1-t) pi_hl^t` for rows `g`, `h`.
///
/// At `t = 0` and `t = 1` this reduces to the log row sums and accepts zero
/// entries; interior `t` needs strictly positive rows.
pub fn log_bt(pool: &WorkerPool, g: Label, h: Label, t: f64) -> Result<f64> {
    check_pair(pool, g, h)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(validation(format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 || t == 1.0 {
        let label = if t == 0.0 { g } else { h };
        return Ok(pool
            .workers()
            .iter()
            .map(|w| ln(w.row(label).iter().sum::<f64>()))
            .sum());
    }
    check_positive_rows(pool, g, h)?;
    Ok(PairLogs::new(pool, g, h).eval(t))
}

fn rows_coincide(pool: &WorkerPool, g: Label, h: Label) -> bool {
    pool.workers().iter().all(|w| {
        w.row(g)
            .iter()
            .zip(w.row(h))
            .all(|(a, b)| (a - b).abs() <= SAME_ROW_TOL)
    })
}

/// Average Chernoff information between truth classes `g` and `h`.
pub fn chernoff_pair(pool: &WorkerPool, g: Label, h: Label) -> Result<PairChernoff> {
    check_pair(pool, g, h)?;
    if g == h {
        return Err(validation(format!(
            "Chernoff information needs two distinct labels, got {g} twice"
        )));
    }
    check_positive_rows(pool, g, h)?;
    if rows_coincide(pool, g, h) {
        return Ok(PairChernoff {
            g,
            h,
            t_star: 0.5,
            value: 0.0,
        });
    }
    let logs = PairLogs::new(pool, g, h);
    let min = golden_section(|t| logs.eval(t), 0.0, 1.0, SEARCH_TOL);
    Ok(PairChernoff {
        g,
        h,
        t_star: min.x,
        value: (-min.value / pool.m() as f64).max(0.0),
    })
}

/// `I(pi)` over all class pairs plus the assumption diagnostics.
pub fn minimax_exponent(pool: &WorkerPool) -> Result<ExponentReport> {
    let rho_m = pool.min_entry();
    if rho_m <= 0.0 {
        return Err(domain(
            "confusion matrices contain zero entries; smooth them before computing exponents",
        ));
    }
    let k = pool.k() as Label;
    let mut pairs = Vec::with_capacity((k * (k - 1) / 2) as usize);
    for g in 1..=k {
        for h in g + 1..=k {
            pairs.push(chernoff_pair(pool, g, h)?);
        }
    }
    let i_pi = pairs.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let argmin = pairs
        .iter()
        .find(|p| p.value <= i_pi + ARGMIN_TIE_TOL)
        .expect("k >= 2 gives at least one pair");
    let (a, b) = (argmin.g, argmin.h);
    let expert_set_size = pool
        .workers()
        .iter()
        .filter(|w| {
            w.prob(a, a) >= (1.0 + EXPERT_ALPHA) * w.prob(a, b) && w.prob(b, b) >= (1.0 + EXPERT_ALPHA) * w.prob(b, a)
        })
        .count();
    Ok(ExponentReport {
        i_pi,
        pairs,
        argmin_pair: (a, b),
        rho_m,
        expert_set_size,
    })
}

fn check_open_unit(p: &OneCoinPool) -> Result<()> {
    match p.p().iter().find(|&&x| x <= 0.0 || x >= 1.0) {
        Some(x) => Err(domain(format!("accuracy {x} must lie strictly inside (0, 1)"))),
        None => Ok(()),
    }
}

/// `I(p) = -(1/m) sum_i ln(2 sqrt(p_i (1 - p_i)))`.
pub fn one_coin_exponent(p: &OneCoinPool) -> Result<f64> {
    check_open_unit(p)?;
    let sum: f64 = p.p().iter().map(|&x| ln(2.0 * sqrt(x * (1.0 - x)))).sum();
    Ok((-sum / p.m() as f64).max(0.0))
}

/// Majority-vote exponent
/// `J(p) = -min_{t in (0, 1]} (1/m) sum_i ln(p_i t + (1 - p_i) / t)`.
///
/// The objective is convex in `ln t`, so the search runs over
/// `s = ln t in [ln MV_T_MIN, 0]`.
pub fn majority_vote_exponent(p: &OneCoinPool) -> Result<MajorityExponent> {
    check_open_unit(p)?;
    let m = p.m() as f64;
    let objective = |s: f64| {
        let t = exp(s);
        p.p().iter().map(|&x| ln(x * t + (1.0 - x) / t)).sum::<f64>() / m
    };
    let min = golden_section(objective, ln(MV_T_MIN), 0.0, SEARCH_TOL);
    Ok(MajorityExponent {
        t_star: exp(min.x),
        value: (-min.value).max(0.0),
    })
}

/// Leading-order worker count `ceil(ln(1/epsilon) / I)` for a target error
/// `epsilon`.
pub fn required_workers(i_pi: f64, epsilon: f64) -> Result<usize> {
    if !(i_pi > 0.0) || !i_pi.is_finite() {
        return Err(domain(format!(
            "exponent {i_pi} is not positive; no finite worker count suffices"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(validation(format!("target error {epsilon} outside (0, 1]")));
    }
    let ratio = ln(1.0 / epsilon) / i_pi;
    // absorb last-bit noise on exact integer ratios
    let nearest = round(ratio);
    let ratio = if (ratio - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        ratio
    };
    Ok(ceil(ratio) as usize)
}
