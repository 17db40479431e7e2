//! Per-matrix change measures between a pretrained and a fine-tuned matrix.
//!
//! * normalized L1: mean absolute per-parameter shift;
//! * angular: mean row-wise angle between corresponding rows, divided by pi;
//! * change-distribution AUC: area under the cumulative-count versus
//!   cumulative-mass curve of the rounded absolute changes.
//!
//! Every measure is accumulated row by row through [`MatrixAccumulator`], so
//! the in-memory and streaming paths produce bit-identical results and the
//! outcome does not depend on the rayon pool size.

use rayon::prelude::*;

use super::MetricsError;
use crate::tensor_io::{Scalar, Tensor, TensorData};

/// Rounding quantum applied to absolute changes before building the
/// change distribution.
pub const DEFAULT_QUANTUM: f64 = 1e-5;

/// Largest rounded multiple we accept; beyond this `f64` stops representing
/// consecutive integers.
const MAX_EXACT_KEY: f64 = 9_007_199_254_740_992.0;

const PAIRWISE_LEAF: usize = 16;

/// A pretrained/fine-tuned pair with identical name, shape and dtype.
#[derive(Debug, Clone, Copy)]
pub struct MatrixPair<'a> {
    before: &'a Tensor,
    after: &'a Tensor,
}

impl<'a> MatrixPair<'a> {
    pub fn new(before: &'a Tensor, after: &'a Tensor) -> Result<Self, MetricsError> {
        if before.name() != after.name() {
            return Err(MetricsError::NameMismatch {
                before: before.name().to_owned(),
                after: after.name().to_owned(),
            });
        }
        if before.shape() != after.shape() {
            return Err(MetricsError::ShapeMismatch {
                name: before.name().to_owned(),
                before: before.shape(),
                after: after.shape(),
            });
        }
        if before.dtype() != after.dtype() {
            return Err(MetricsError::DtypeMismatch {
                name: before.name().to_owned(),
                before: before.dtype(),
                after: after.dtype(),
            });
        }
        Ok(Self { before, after })
    }

    pub fn before(&self) -> &'a Tensor {
        self.before
    }

    pub fn after(&self) -> &'a Tensor {
        self.after
    }

    pub fn rows(&self) -> usize {
        self.before.rows()
    }

    pub fn cols(&self) -> usize {
        self.before.cols()
    }
}

macro_rules! with_slices {
    ($pair:expr, |$b:ident, $a:ident| $body:expr) => {
        match ($pair.before.data(), $pair.after.data()) {
            (TensorData::F32($b), TensorData::F32($a)) => $body,
            (TensorData::F64($b), TensorData::F64($a)) => $body,
            _ => unreachable!("MatrixPair guarantees matching dtypes"),
        }
    };
}

/// Pairwise (tree) summation of `f(i)` over `lo..hi`.
fn pairwise<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
    if hi - lo <= PAIRWISE_LEAF {
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        s
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise(lo, mid, f) + pairwise(mid, hi, f)
    }
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise(0, xs.len(), |i| xs[i])
}

/// Angle in `[0, pi]` between two rows, or `None` when either is all zeros.
///
/// Uses `2 atan2(|u - v|, |u + v|)` on the unit vectors, which equals the
/// arccosine of the cosine similarity but stays accurate for nearly parallel
/// rows where arccos loses half its digits.
fn row_angle<T: Scalar>(before: &[T], after: &[T]) -> Option<f64> {
    let scale = |xs: &[T]| xs.iter().fold(0.0f64, |m, x| m.max(x.to_f64().abs()));
    let (sb, sa) = (scale(before), scale(after));
    if sb == 0.0 || sa == 0.0 {
        return None;
    }
    let norm = |xs: &[T], s: f64| {
        xs.iter()
            .map(|x| {
                let y = x.to_f64() / s;
                y * y
            })
            .sum::<f64>()
            .sqrt()
    };
    let nb = norm(before, sb) * sb;
    let na = norm(after, sa) * sa;
    let (mut minus, mut plus) = (0.0f64, 0.0f64);
    for (b, a) in before.iter().zip(after) {
        let u = b.to_f64() / nb;
        let v = a.to_f64() / na;
        minus += (u - v) * (u - v);
        plus += (u + v) * (u + v);
    }
    Some(2.0 * minus.sqrt().atan2(plus.sqrt()))
}

fn row_abs_sum<T: Scalar>(before: &[T], after: &[T]) -> f64 {
    pairwise(0, before.len(), |i| (after[i].to_f64() - before[i].to_f64()).abs())
}

/// Integer storage for rounded changes, measured in quanta.
pub(crate) trait Key: Copy + Ord + Send + Sync + Default + 'static {
    const LIMIT: f64;
    fn from_rounded(x: f64) -> Self;
    fn widen(self) -> u128;
}

impl Key for u32 {
    const LIMIT: f64 = u32::MAX as f64;
    #[inline]
    fn from_rounded(x: f64) -> Self {
        x as u32
    }
    #[inline]
    fn widen(self) -> u128 {
        self as u128
    }
}

impl Key for u64 {
    const LIMIT: f64 = MAX_EXACT_KEY;
    #[inline]
    fn from_rounded(x: f64) -> Self {
        x as u64
    }
    #[inline]
    fn widen(self) -> u128 {
        self as u128
    }
}

struct RowStats {
    abs_sum: f64,
    angle: Option<f64>,
    max_key: f64,
}

fn row_stats<T: Scalar, K: Key>(before: &[T], after: &[T], quantum: f64, keys: &mut [K]) -> RowStats {
    let mut max_key = 0.0f64;
    for ((b, a), k) in before.iter().zip(after).zip(keys.iter_mut()) {
        // f64::round ties away from zero.
        let q = ((a.to_f64() - b.to_f64()).abs() / quantum).round();
        max_key = max_key.max(q);
        *k = K::from_rounded(q);
    }
    RowStats {
        abs_sum: row_abs_sum(before, after),
        angle: row_angle(before, after),
        max_key,
    }
}

fn block_stats<T: Scalar, K: Key>(
    before: &[T],
    after: &[T],
    cols: usize,
    quantum: f64,
    keys: &mut [K],
) -> Vec<RowStats> {
    before
        .par_chunks(cols)
        .zip(after.par_chunks(cols))
        .zip(keys.par_chunks_mut(cols))
        .with_min_len(8)
        .map(|((b, a), k)| row_stats(b, a, quantum, k))
        .collect()
}

enum KeyBuf {
    Narrow(Vec<u32>),
    Wide(Vec<u64>),
}

/// Row-streaming accumulator for all three measures of one matrix.
///
/// Rows must be pushed in order. Memory held is one integer key per element
/// (4 bytes while every rounded change fits in `u32`) plus two `f64` per row.
pub(crate) struct MatrixAccumulator {
    name: String,
    rows: usize,
    cols: usize,
    quantum: f64,
    filled_rows: usize,
    row_abs: Vec<f64>,
    angles: Vec<f64>,
    zero_rows: usize,
    keys: KeyBuf,
}

impl MatrixAccumulator {
    pub(crate) fn new(name: &str, rows: usize, cols: usize, quantum: f64) -> Result<Self, MetricsError> {
        check_quantum(quantum)?;
        Ok(Self {
            name: name.to_owned(),
            rows,
            cols,
            quantum,
            filled_rows: 0,
            row_abs: Vec::with_capacity(rows),
            angles: Vec::with_capacity(rows),
            zero_rows: 0,
            keys: KeyBuf::Narrow(vec![0u32; rows * cols]),
        })
    }

    pub(crate) fn push_rows<T: Scalar>(&mut self, before: &[T], after: &[T]) -> Result<(), MetricsError> {
        debug_assert_eq!(before.len(), after.len());
        debug_assert_eq!(before.len() % self.cols, 0);
        let n_rows = before.len() / self.cols;
        assert!(self.filled_rows + n_rows <= self.rows, "more rows pushed than declared");
        let start = self.filled_rows * self.cols;
        let end = start + before.len();

        let stats = loop {
            match &mut self.keys {
                KeyBuf::Narrow(keys) => {
                    let stats = block_stats(before, after, self.cols, self.quantum, &mut keys[start..end]);
                    if stats.iter().all(|s| s.max_key <= u32::LIMIT) {
                        break stats;
                    }
                    let wide: Vec<u64> = keys.iter().map(|&k| k as u64).collect();
                    self.keys = KeyBuf::Wide(wide);
                }
                KeyBuf::Wide(keys) => {
                    let stats = block_stats(before, after, self.cols, self.quantum, &mut keys[start..end]);
                    if stats.iter().any(|s| s.max_key > u64::LIMIT) {
                        return Err(MetricsError::QuantumTooFine {
                            name: self.name.clone(),
                            quantum: self.quantum,
                        });
                    }
                    break stats;
                }
            }
        };

        for s in stats {
            self.row_abs.push(s.abs_sum);
            match s.angle {
                Some(a) => self.angles.push(a),
                None => self.zero_rows += 1,
            }
        }
        self.filled_rows += n_rows;
        Ok(())
    }

    pub(crate) fn finish(self) -> MatrixMeasures {
        assert_eq!(self.filled_rows, self.rows, "matrix `{}` is incomplete", self.name);
        let elems = (self.rows * self.cols) as f64;
        let d_l1 = pairwise_sum(&self.row_abs) / elems;
        let kept = self.rows - self.zero_rows;
        let d_ang = if kept == 0 {
            0.0
        } else {
            pairwise_sum(&self.angles) / (kept as f64 * std::f64::consts::PI)
        };
        let (auc, zero_mass) = match self.keys {
            KeyBuf::Narrow(mut keys) => {
                keys.par_sort_unstable();
                sorted_keys_auc(&keys)
            }
            KeyBuf::Wide(mut keys) => {
                keys.par_sort_unstable();
                sorted_keys_auc(&keys)
            }
        };
        MatrixMeasures {
            rows: self.rows,
            cols: self.cols,
            d_l1,
            d_ang,
            zero_rows: self.zero_rows,
            auc,
            zero_mass,
        }
    }
}

/// Walks distinct thresholds of sorted keys, emitting the curve points after
/// the implicit `(0, 0)`. Returns `true` when the total mass is zero.
fn walk_points<K: Key>(sorted: &[K], mut emit: impl FnMut(f64, f64)) -> bool {
    let n = sorted.len();
    let total: u128 = sorted.iter().map(|k| k.widen()).sum();
    if total == 0 {
        if n > 0 {
            emit(1.0, 0.0);
        }
        return true;
    }
    let (nf, tf) = (n as f64, total as f64);
    let mut count = 0usize;
    let mut mass = 0u128;
    let mut i = 0;
    while i < n {
        let k = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == k {
            j += 1;
        }
        count += j - i;
        mass += k.widen() * (j - i) as u128;
        emit(count as f64 / nf, mass as f64 / tf);
        i = j;
    }
    false
}

/// Trapezoidal area accumulated point by point, starting from `(0, 0)`.
#[derive(Default)]
struct Trapezoid {
    x: f64,
    y: f64,
    area: f64,
}

impl Trapezoid {
    fn push(&mut self, x: f64, y: f64) {
        self.area += (x - self.x) * (y + self.y) * 0.5;
        self.x = x;
        self.y = y;
    }
}

fn sorted_keys_auc<K: Key>(sorted: &[K]) -> (f64, bool) {
    let mut trap = Trapezoid::default();
    let zero_mass = walk_points(sorted, |x, y| trap.push(x, y));
    if zero_mass {
        (0.5, true)
    } else {
        (trap.area, false)
    }
}

pub(crate) fn check_quantum(quantum: f64) -> Result<(), MetricsError> {
    if quantum.is_finite() && quantum > 0.0 {
        Ok(())
    } else {
        Err(MetricsError::InvalidQuantum(quantum))
    }
}

/// All three measures of one matrix pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixMeasures {
    pub rows: usize,
    pub cols: usize,
    pub d_l1: f64,
    pub d_ang: f64,
    pub zero_rows: usize,
    pub auc: f64,
    /// Every rounded change was zero, so `auc` holds the 0.5 convention value.
    pub zero_mass: bool,
}

impl MatrixMeasures {
    /// Every row was skipped by the angular measure; `d_ang` is 0 by convention.
    pub fn all_rows_zero(&self) -> bool {
        self.zero_rows == self.rows
    }
}

/// Computes all three measures in one pass over the pair.
pub fn measure_pair(pair: &MatrixPair<'_>, quantum: f64) -> Result<MatrixMeasures, MetricsError> {
    let mut acc = MatrixAccumulator::new(pair.before.name(), pair.rows(), pair.cols(), quantum)?;
    with_slices!(pair, |b, a| acc.push_rows(b, a))?;
    Ok(acc.finish())
}

/// Normalized L1 change: `sum |after - before| / (m n)`, accumulated in `f64`.
pub fn l1_change(pair: &MatrixPair<'_>) -> f64 {
    let cols = pair.cols();
    let elems = (pair.rows() * cols) as f64;
    let row_sums: Vec<f64> = with_slices!(pair, |b, a| b
        .chunks(cols)
        .zip(a.chunks(cols))
        .map(|(rb, ra)| row_abs_sum(rb, ra))
        .collect());
    pairwise_sum(&row_sums) / elems
}

/// Result of the row-wise angular measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularChange {
    /// Mean angle over non-zero rows divided by pi, in `[0, 1]`.
    pub value: f64,
    pub rows: usize,
    /// Rows skipped because either side had zero norm.
    pub zero_rows: usize,
}

impl AngularChange {
    /// No row survived; `value` is 0 by convention.
    pub fn all_rows_zero(&self) -> bool {
        self.zero_rows == self.rows
    }
}

pub fn angular_change(pair: &MatrixPair<'_>) -> AngularChange {
    let cols = pair.cols();
    let angles: Vec<Option<f64>> = with_slices!(pair, |b, a| b
        .chunks(cols)
        .zip(a.chunks(cols))
        .map(|(rb, ra)| row_angle(rb, ra))
        .collect());
    let kept: Vec<f64> = angles.iter().flatten().copied().collect();
    let zero_rows = angles.len() - kept.len();
    let value = if kept.is_empty() {
        0.0
    } else {
        pairwise_sum(&kept) / (kept.len() as f64 * std::f64::consts::PI)
    };
    AngularChange { value, rows: pair.rows(), zero_rows }
}

/// Cumulative-count versus cumulative-mass curve of rounded absolute changes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeDistribution {
    points: Vec<(f64, f64)>,
    quantum: f64,
    zero_mass: bool,
}

impl ChangeDistribution {
    /// Curve points, starting at `(0, 0)`, strictly increasing in x.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    /// Every rounded change is zero; the mass axis is undefined.
    pub fn zero_mass(&self) -> bool {
        self.zero_mass
    }
}

pub fn change_distribution(pair: &MatrixPair<'_>, quantum: f64) -> Result<ChangeDistribution, MetricsError> {
    check_quantum(quantum)?;
    let mut keys: Vec<u64> = Vec::with_capacity(pair.before.len());
    let mut max_key = 0.0f64;
    with_slices!(pair, |b, a| {
        for (x, y) in b.iter().zip(a.iter()) {
            let q = ((y.to_f64() - x.to_f64()).abs() / quantum).round();
            max_key = max_key.max(q);
            keys.push(q as u64);
        }
    });
    if max_key > u64::LIMIT {
        return Err(MetricsError::QuantumTooFine {
            name: pair.before.name().to_owned(),
            quantum,
        });
    }
    keys.sort_unstable();
    let mut points = vec![(0.0, 0.0)];
    let zero_mass = walk_points(&keys, |x, y| points.push((x, y)));
    Ok(ChangeDistribution { points, quantum, zero_mass })
}

/// Trapezoidal area under the distribution curve, in `[0, 0.5]`.
/// Zero-mass distributions get the convention value 0.5.
pub fn auc(dist: &ChangeDistribution) -> f64 {
    if dist.zero_mass {
        return 0.5;
    }
    let mut trap = Trapezoid::default();
    for &(x, y) in dist.points.iter().skip(1) {
        trap.push(x, y);
    }
    trap.area
}
