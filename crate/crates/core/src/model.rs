//! Dawid-Skene model types and the label simulator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{validation, Result};
use crate::rng::UniformStream;

/// A class label in `1..=k`; [`MISSING`] marks an absent observation.
pub type Label = u32;

pub const MISSING: Label = 0;

const ROW_SUM_TOL: f64 = 1e-12;

/// One worker's `k x k` row-stochastic confusion matrix:
/// `prob(g, h) = P(worker reports h | truth is g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    k: usize,
    data: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(validation(format!(
                "confusion matrix must be square, got {k} rows of unequal length"
            )));
        }
        Self::from_flat(k, rows.into_iter().flatten().collect())
    }

    /// Builds from row-major data of length `k * k`.
    pub fn from_flat(k: usize, data: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(validation(format!("need k >= 2 labels, got {k}")));
        }
        if data.len() != k * k {
            return Err(validation(format!(
                "expected {} entries for k = {k}, got {}",
                k * k,
                data.len()
            )));
        }
        for (g, row) in data.chunks_exact(k).enumerate() {
            if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(validation(format!("row {} has entry {x} outside [0, 1]", g + 1)));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(validation(format!("row {} sums to {sum}, not 1", g + 1)));
            }
        }
        Ok(ConfusionMatrix { k, data })
    }

    pub fn identity(k: usize) -> Result<Self> {
        let mut data = vec![0.0; k * k];
        for g in 0..k {
            data[g * k + g] = 1.0;
        }
        Self::from_flat(k, data)
    }

    /// The two-label one-coin matrix `[[p, 1-p], [1-p, p]]`.
    pub fn one_coin(p: f64) -> Result<Self> {
        Self::from_flat(2, vec![p, 1.0 - p, 1.0 - p, p])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row `g` (1-based truth label) as a slice indexed by `h - 1`.
    #[inline]
    pub fn row(&self, g: Label) -> &[f64] {
        let g = g as usize - 1;
        &self.data[g * self.k..(g + 1) * self.k]
    }

    #[inline]
    pub fn prob(&self, g: Label, h: Label) -> f64 {
        self.data[(g as usize - 1) * self.k + h as usize - 1]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }
}

/// An ordered set of `m >= 1` workers sharing the same label count `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerPool {
    k: usize,
    workers: Vec<ConfusionMatrix>,
}

impl WorkerPool {
    pub fn new(workers: Vec<ConfusionMatrix>) -> Result<Self> {
        let k = match workers.first() {
            Some(w) => w.k(),
            None => return Err(validation("worker pool needs at least one worker")),
        };
        if let Some(i) = workers.iter().position(|w| w.k() != k) {
            return Err(validation(format!(
                "worker {} has k = {}, expected {k}",
                i + 1,
                workers[i].k()
            )));
        }
        Ok(WorkerPool { k, workers })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.workers.len()
    }

    pub fn workers(&self) -> &[ConfusionMatrix] {
        &self.workers
    }

    pub fn worker(&self, i: usize) -> &ConfusionMatrix {
        &self.workers[i]
    }

    /// Smallest confusion entry over all workers (`rho_m`).
    pub fn min_entry(&self) -> f64 {
        self.workers
            .iter()
            .map(ConfusionMatrix::min_entry)
            .fold(f64::INFINITY, f64::min)
    }

    /// The accuracies `p_i` when every worker is a symmetric 2x2 one-coin
    /// matrix, `None` otherwise.
    pub fn as_one_coin(&self) -> Option<OneCoinPool> {
        if self.k != 2 {
            return None;
        }
        let mut p = Vec::with_capacity(self.m());
        for w in &self.workers {
            if (w.prob(1, 1) - w.prob(2, 2)).abs() > ROW_SUM_TOL {
                return None;
            }
            p.push(w.prob(1, 1));
        }
        OneCoinPool::new(p).ok()
    }

    /// The same matrices under the label permutation `perm` (1-based:
    /// label `g` becomes `perm[g - 1]`), applied to both truth and report.
    pub fn relabeled(&self, perm: &[Label]) -> Result<Self> {
        check_permutation(perm, self.k)?;
        let k = self.k;
        let workers = self
            .workers
            .iter()
            .map(|w| {
                let mut data = vec![0.0; k * k];
                for g in 1..=k as Label {
                    for h in 1..=k as Label {
                        let (pg, ph) = (perm[g as usize - 1] as usize - 1, perm[h as usize - 1] as usize - 1);
                        data[pg * k + ph] = w.prob(g, h);
                    }
                }
                ConfusionMatrix::from_flat(k, data)
            })
            .collect::<Result<Vec<_>>>()?;
        WorkerPool::new(workers)
    }
}

pub(crate) fn check_permutation(perm: &[Label], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(validation(format!(
            "permutation has length {}, expected {k}",
            perm.len()
        )));
    }
    for &l in perm {
        let idx = (l as usize).wrapping_sub(1);
        if idx >= k || seen[idx] {
            return Err(validation("not a permutation of 1..=k"));
        }
        seen[idx] = true;
    }
    Ok(())
}

/// Two-label pool where worker `i` is correct with probability `p_i`
/// regardless of the true class.
#[derive(Debug, Clone, PartialEq)]
pub struct OneCoinPool {
    p: Vec<f64>,
}

impl OneCoinPool {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(validation("one-coin pool needs at least one worker"));
        }
        if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(validation(format!("accuracy {x} outside [0, 1]")));
        }
        Ok(OneCoinPool { p })
    }

    pub fn uniform(p: f64, m: usize) -> Result<Self> {
        Self::new(vec![p; m])
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn to_pool(&self) -> WorkerPool {
        let workers = self
            .p
            .iter()
            .map(|&p| ConfusionMatrix::one_coin(p).expect("p validated in [0, 1]"))
            .collect();
        WorkerPool::new(workers).expect("non-empty, all k = 2")
    }
}

/// Deterministic true labels `y_1..y_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    labels: Vec<Label>,
}

impl GroundTruth {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(validation("ground truth needs at least one item"));
        }
        if labels.contains(&0) {
            return Err(validation("true labels must be in 1..=k"));
        }
        Ok(GroundTruth { labels })
    }

    /// Lays out `n` items in label blocks whose sizes follow `weights`
    /// (largest-remainder rounding). Uniform weights when `weights` is `None`.
    pub fn with_proportions(n: usize, k: usize, weights: Option<&[f64]>) -> Result<Self> {
        let uniform = vec![1.0; k];
        let weights = weights.unwrap_or(&uniform);
        if weights.len() != k || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(validation("class weights must be k non-negative numbers"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(validation("class weights must not all be zero"));
        }
        let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| *x as usize).collect();
        let mut rest = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..k).collect();
        // stable: larger remainder first, then smaller label
        order.sort_by(|&a, &b| {
            let ra = exact[a] - counts[a] as f64;
            let rb = exact[b] - counts[b] as f64;
            rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal)
        });
        for &g in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[g] += 1;
            rest -= 1;
        }
        let labels = counts
            .iter()
            .enumerate()
            .flat_map(|(g, &c)| core::iter::repeat_n(g as Label + 1, c))
            .collect();
        Self::new(labels)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn max_label(&self) -> Label {
        self.labels.iter().copied().max().unwrap_or(1)
    }

    pub fn check_k(&self, k: usize) -> Result<()> {
        match self.labels.iter().position(|&y| y as usize > k) {
            Some(j) => Err(validation(format!(
                "true label {} of item {} is outside 1..={k}",
                self.labels[j],
                j + 1
            ))),
            None => Ok(()),
        }
    }
}

/// Observed labels `X_ij` stored worker-major: `m` rows of `n` items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    k: usize,
    m: usize,
    n: usize,
    data: Vec<Label>,
}

impl LabelMatrix {
    pub fn new(k: usize, m: usize, n: usize, data: Vec<Label>) -> Result<Self> {
        if k < 2 {
            return Err(validation(format!("need k >= 2 labels, got {k}")));
        }
        if m == 0 || n == 0 {
            return Err(validation("label matrix must have at least one worker and one item"));
        }
        if data.len() != m * n {
            return Err(validation(format!(
                "expected {} labels for {m} x {n}, got {}",
                m * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&x| x as usize > k) {
            return Err(validation(format!(
                "label {} at worker {}, item {} exceeds k = {k}",
                data[pos],
                pos / n + 1,
                pos % n + 1
            )));
        }
        Ok(LabelMatrix { k, m, n, data })
    }

    pub fn from_rows(k: usize, rows: Vec<Vec<Label>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(validation("label rows have unequal lengths"));
        }
        Self::new(k, m, n, rows.into_iter().flatten().collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, worker: usize, item: usize) -> Label {
        self.data[worker * self.n + item]
    }

    pub fn worker_row(&self, worker: usize) -> &[Label] {
        &self.data[worker * self.n..(worker + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Label]> {
        self.data.chunks_exact(self.n)
    }

    /// Copies item `j`'s labels from every worker into `out` (length `m`).
    pub fn column_into(&self, item: usize, out: &mut [Label]) {
        for (i, slot) in out.iter_mut().enumerate().take(self.m) {
            *slot = self.data[i * self.n + item];
        }
    }

    pub fn has_missing(&self) -> bool {
        self.data.contains(&MISSING)
    }

    /// Keeps only the first `m` workers.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.m {
            return Err(validation(format!("prefix of {m} workers from {}", self.m)));
        }
        Self::new(self.k, m, self.n, self.data[..m * self.n].to_vec())
    }

    pub(crate) fn require_complete(&self) -> Result<()> {
        if self.has_missing() {
            return Err(validation("labels contain missing entries; remap them first"));
        }
        Ok(())
    }

    /// Applies the permutation `perm` (label `g` becomes `perm[g - 1]`).
    pub fn relabeled(&self, perm: &[Label]) -> Result<Self> {
        check_permutation(perm, self.k)?;
        let data = self
            .data
            .iter()
            .map(|&x| if x == MISSING { MISSING } else { perm[x as usize - 1] })
            .collect();
        Self::new(self.k, self.m, self.n, data)
    }
}

/// Per-worker cumulative row sums for inverse-CDF sampling.
struct CumulativePool {
    k: usize,
    cum: Vec<f64>,
}

impl CumulativePool {
    fn new(pool: &WorkerPool) -> Self {
        let k = pool.k();
        let mut cum = Vec::with_capacity(pool.m() * k * k);
        for w in pool.workers() {
            for row in w.rows() {
                let mut acc = 0.0;
                for &p in row {
                    acc += p;
                    cum.push(acc);
                }
            }
        }
        CumulativePool { k, cum }
    }

    #[inline]
    fn draw(&self, worker: usize, truth: Label, u: f64) -> Label {
        let k = self.k;
        let start = (worker * k + truth as usize - 1) * k;
        let row = &self.cum[start..start + k];
        let h = row.partition_point(|&c| c <= u);
        if h < k {
            return h as Label + 1;
        }
        // u landed above a cumulative sum that rounded just below 1:
        // take the last label with positive mass
        let mut last = k;
        while last > 1 && row[last - 1] == row[last - 2] {
            last -= 1;
        }
        last as Label
    }
}

/// Draws labels for worker `worker` on items `start..start + out.len()`.
///
/// Cell `(i, j)` depends only on `(seed, i, j)`, so this writes exactly the
/// slice [`generate_labels`] would produce for the same range.
pub fn sample_segment(
    pool: &WorkerPool,
    truth: &GroundTruth,
    seed: u64,
    worker: usize,
    start: usize,
    out: &mut [Label],
) -> Result<()> {
    truth.check_k(pool.k())?;
    if worker >= pool.m() || start + out.len() > truth.n() {
        return Err(validation("segment outside the label grid"));
    }
    let cum = CumulativePool::new(&WorkerPool::new(vec![pool.worker(worker).clone()])?);
    let mut stream = UniformStream::new(seed, worker as u64, start as u64);
    for (slot, &y) in out.iter_mut().zip(&truth.labels()[start..]) {
        *slot = cum.draw(0, y, stream.next_unit());
    }
    Ok(())
}

/// Simulates `X_ij ~ Multinomial(pi^(i)_{y_j, *})` independently per cell.
pub fn generate_labels(pool: &WorkerPool, truth: &GroundTruth, seed: u64) -> Result<LabelMatrix> {
    truth.check_k(pool.k())?;
    let (m, n) = (pool.m(), truth.n());
    let cum = CumulativePool::new(pool);
    let mut data = vec![MISSING; m * n];
    for (i, row) in data.chunks_exact_mut(n).enumerate() {
        let mut stream = UniformStream::new(seed, i as u64, 0);
        for (slot, &y) in row.iter_mut().zip(truth.labels()) {
            *slot = cum.draw(i, y, stream.next_unit());
        }
    }
    LabelMatrix::new(pool.k(), m, n, data)
}

/// Fraction of items where `estimate` disagrees with `truth`.
pub fn misclassification_rate(estimate: &GroundTruth, truth: &GroundTruth) -> Result<f64> {
    if estimate.n() != truth.n() {
        return Err(validation(format!(
            "estimate has {} items, truth has {}",
            estimate.n(),
            truth.n()
        )));
    }
    Ok(count_errors(estimate.labels(), truth.labels()) as f64 / truth.n() as f64)
}

pub(crate) fn count_errors(estimate: &[Label], truth: &[Label]) -> usize {
    estimate.iter().zip(truth).filter(|(a, b)| a != b).count()
}

/// Treats missing labels as an extra category `k + 1`.
///
/// Returns the new matrix and its label count; unchanged when nothing is
/// missing.
pub fn remap_missing(labels: &LabelMatrix) -> (LabelMatrix, usize) {
    if !labels.has_missing() {
        return (labels.clone(), labels.k());
    }
    let k = labels.k() + 1;
    let data = labels
        .data
        .iter()
        .map(|&x| if x == MISSING { k as Label } else { x })
        .collect();
    (
        LabelMatrix {
            k,
            m: labels.m,
            n: labels.n,
            data,
        },
        k,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_matrix_invariants() {
        assert!(ConfusionMatrix::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).is_ok());
        assert!(ConfusionMatrix::new(vec![vec![0.5, 0.6], vec![0.2, 0.8]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![1.2, -0.2], vec![0.2, 0.8]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![1.0]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![f64::NAN, 1.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn pool_rejects_mixed_k_and_empty() {
        let a = ConfusionMatrix::identity(2).unwrap();
        let b = ConfusionMatrix::identity(3).unwrap();
        assert!(WorkerPool::new(vec![a, b]).is_err());
        assert!(WorkerPool::new(vec![]).is_err());
    }

    #[test]
    fn one_coin_conversion() {
        let pool = OneCoinPool::new(vec![0.8, 0.3]).unwrap().to_pool();
        assert_eq!(
            pool.worker(0).to_rows(),
            vec![vec![0.8, 1.0 - 0.8], vec![1.0 - 0.8, 0.8]]
        );
        assert_eq!(pool.as_one_coin().unwrap().p(), &[0.8, 0.3]);
        assert!(OneCoinPool::new(vec![1.1]).is_err());
        assert!(OneCoinPool::new(vec![]).is_err());
    }

    #[test]
    fn identity_worker_copies_truth() {
        let pool = WorkerPool::new(vec![ConfusionMatrix::identity(4).unwrap()]).unwrap();
        let truth = GroundTruth::new(vec![4, 1, 3, 2, 2, 1]).unwrap();
        let labels = generate_labels(&pool, &truth, 99).unwrap();
        assert_eq!(labels.worker_row(0), truth.labels());
    }

    #[test]
    fn noiseless_one_coin() {
        let pool = OneCoinPool::new(vec![1.0]).unwrap().to_pool();
        let truth = GroundTruth::new(vec![1, 2, 1]).unwrap();
        let labels = generate_labels(&pool, &truth, 0).unwrap();
        assert_eq!(labels.worker_row(0), &[1, 2, 1]);
    }

    #[test]
    fn zero_mass_labels_never_drawn() {
        let w = ConfusionMatrix::new(vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 0.0, 1.0]]).unwrap();
        let pool = WorkerPool::new(vec![w]).unwrap();
        let truth = GroundTruth::new(vec![1, 2, 3].repeat(500)).unwrap();
        let labels = generate_labels(&pool, &truth, 3).unwrap();
        for (x, y) in labels.worker_row(0).iter().zip(truth.labels()) {
            match y {
                1 => assert_eq!(*x, 2),
                2 => assert!(*x == 1 || *x == 3),
                _ => assert_eq!(*x, 3),
            }
        }
    }

    #[test]
    fn law_of_large_numbers_one_coin() {
        let n = 100_000;
        let pool = OneCoinPool::new(vec![0.8]).unwrap().to_pool();
        let truth = GroundTruth::new(vec![1; n]).unwrap();
        let labels = generate_labels(&pool, &truth, 2024).unwrap();
        let frac = labels.worker_row(0).iter().filter(|&&x| x == 1).count() as f64 / n as f64;
        let bound = 3.0 * (0.16f64 / n as f64).sqrt();
        assert!((frac - 0.8).abs() <= bound, "frac = {frac}, bound = {bound}");
    }

    #[test]
    fn rejects_truth_outside_k() {
        let pool = OneCoinPool::new(vec![0.7]).unwrap().to_pool();
        let truth = GroundTruth::new(vec![1, 3]).unwrap();
        assert!(matches!(
            generate_labels(&pool, &truth, 0),
            Err(crate::Error::Validation(_))
        ));
        assert!(GroundTruth::new(vec![0, 1]).is_err());
        assert!(GroundTruth::new(vec![]).is_err());
    }

    #[test]
    fn segments_match_full_generation() {
        let pool = OneCoinPool::new(vec![0.6, 0.9, 0.75]).unwrap().to_pool();
        let truth = GroundTruth::with_proportions(257, 2, None).unwrap();
        let full = generate_labels(&pool, &truth, 5).unwrap();
        for worker in 0..3 {
            for (start, len) in [(0, 257), (13, 100), (200, 57)] {
                let mut out = vec![0; len];
                sample_segment(&pool, &truth, 5, worker, start, &mut out).unwrap();
                assert_eq!(&out[..], &full.worker_row(worker)[start..start + len]);
            }
        }
    }

    #[test]
    fn misclassification_examples() {
        let t = GroundTruth::new(vec![1, 2, 1, 2]).unwrap();
        assert_eq!(misclassification_rate(&t, &t).unwrap(), 0.0);
        let flipped = GroundTruth::new(vec![2, 1, 2, 1]).unwrap();
        assert_eq!(misclassification_rate(&flipped, &t).unwrap(), 1.0);
        let one_off = GroundTruth::new(vec![1, 2, 2, 2]).unwrap();
        assert_eq!(misclassification_rate(&one_off, &t).unwrap(), 0.25);
        let short = GroundTruth::new(vec![1]).unwrap();
        assert!(misclassification_rate(&short, &t).is_err());
    }

    #[test]
    fn remap_missing_examples() {
        let full = LabelMatrix::from_rows(2, vec![vec![1, 2], vec![2, 2]]).unwrap();
        let (same, k) = remap_missing(&full);
        assert_eq!((same, k), (full, 2));

        let one = LabelMatrix::from_rows(2, vec![vec![1, 0], vec![2, 2]]).unwrap();
        let (remapped, k) = remap_missing(&one);
        assert_eq!(k, 3);
        assert_eq!(remapped.get(0, 1), 3);
        assert_eq!(remapped.get(0, 0), 1);

        let empty = LabelMatrix::from_rows(2, vec![vec![0, 0], vec![0, 0]]).unwrap();
        let (remapped, k) = remap_missing(&empty);
        assert_eq!(k, 3);
        assert!(remapped.rows().flatten().all(|&x| x == 3));
    }

    #[test]
    fn proportions_layout() {
        let t = GroundTruth::with_proportions(10, 2, Some(&[0.7, 0.3])).unwrap();
        assert_eq!(t.labels(), &[1, 1, 1, 1, 1, 1, 1, 2, 2, 2]);
        let t = GroundTruth::with_proportions(7, 3, None).unwrap();
        assert_eq!(t.labels().iter().filter(|&&y| y == 1).count(), 3);
        assert_eq!(t.n(), 7);
    }
}
