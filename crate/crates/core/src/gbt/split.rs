//! Histogram split search.
//!
//! A split sends rows with bin id `<= bin` left. Its improvement is the
//! reduction in weighted variance of the gradient target,
//! `(W_L * W_R / W^2) * (mean_L - mean_R)^2`, which equals
//! `(SSE_parent - SSE_left - SSE_right) / W`.

use super::GbtParams;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStats {
    pub weight: f64,
    /// Weighted gradient sum.
    pub grad: f64,
    /// Weighted hessian sum.
    pub hess: f64,
    pub count: u32,
}

impl BinStats {
    #[inline]
    pub fn add(&mut self, weight: f64, grad: f64, hess: f64) {
        self.weight += weight;
        self.grad += weight * grad;
        self.hess += weight * hess;
        self.count += 1;
    }

    #[inline]
    pub fn merge(&mut self, other: &BinStats) {
        self.weight += other.weight;
        self.grad += other.grad;
        self.hess += other.hess;
        self.count += other.count;
    }

    pub fn minus(&self, other: &BinStats) -> BinStats {
        BinStats {
            weight: self.weight - other.weight,
            grad: self.grad - other.grad,
            hess: self.hess - other.hess,
            count: self.count - other.count,
        }
    }

    fn mean(&self) -> f64 {
        if self.weight > 0.0 {
            self.grad / self.weight
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    /// Rows whose bin id is `<= bin` go left.
    pub bin: u8,
    pub improvement: f64,
    pub left: BinStats,
    pub right: BinStats,
}

const RELATIVE_NOISE: f64 = 1e-12;

pub(crate) fn improvement(left: &BinStats, right: &BinStats) -> f64 {
    let total = left.weight + right.weight;
    if left.weight <= 0.0 || right.weight <= 0.0 || total <= 0.0 {
        return 0.0;
    }
    let (ml, mr) = (left.mean(), right.mean());
    let diff = ml - mr;
    // right-hand sums come from subtraction; treat rounding-level gaps as no gap
    if diff.abs() <= RELATIVE_NOISE * (ml.abs() + mr.abs()) {
        return 0.0;
    }
    (left.weight / total) * (right.weight / total) * diff * diff
}

/// Best boundary within one feature's histogram, or `None` when nothing
/// clears `min_split_improvement` with `min_rows_per_leaf` rows on each side.
/// Earlier bins win ties.
pub(crate) fn scan_histogram(
    hist: &[BinStats],
    total: &BinStats,
    params: &GbtParams,
) -> Option<SplitCandidate> {
    let min_rows = params.min_rows_per_leaf as u32;
    let mut best: Option<SplitCandidate> = None;
    let mut left = BinStats::default();
    for (b, stats) in hist.iter().enumerate().take(hist.len().saturating_sub(1)) {
        left.merge(stats);
        let right = total.minus(&left);
        if left.count < min_rows || right.count < min_rows {
            continue;
        }
        let gain = improvement(&left, &right);
        if gain <= 0.0 || gain < params.min_split_improvement {
            continue;
        }
        if best.is_none_or(|s| gain > s.improvement) {
            best = Some(SplitCandidate {
                bin: b as u8,
                improvement: gain,
                left,
                right,
            });
        }
    }
    best
}

/// Best split of a single binned column.
pub fn find_best_split(
    binned_column: &[u8],
    gradients: &[f64],
    hessians: &[f64],
    weights: &[f64],
    params: &GbtParams,
) -> Option<SplitCandidate> {
    let n = binned_column.len();
    if n == 0 || gradients.len() != n || hessians.len() != n || weights.len() != n {
        return None;
    }
    let n_bins = binned_column
        .iter()
        .map(|&b| b as usize + 1)
        .max()
        .unwrap_or(1);
    let mut hist = vec![BinStats::default(); n_bins];
    let mut total = BinStats::default();
    for i in 0..n {
        hist[binned_column[i] as usize].add(weights[i], gradients[i], hessians[i]);
        total.add(weights[i], gradients[i], hessians[i]);
    }
    scan_histogram(&hist, &total, params)
}
