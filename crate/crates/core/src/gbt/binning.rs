//! Quantile binning over the distinct values of a feature column.

use crate::matrix::Matrix;

/// Upper limit on bins per feature, so bin ids fit a `u8`.
pub const MAX_BINS: usize = 256;

/// Cut points between consecutive bins. A value `x` falls in bin `b` where
/// `b` is the number of cut points strictly below `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinCuts {
    pub edges: Vec<f64>,
}

impl BinCuts {
    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin(&self, x: f64) -> u8 {
        self.edges.partition_point(|&e| e < x) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedColumn {
    pub cuts: BinCuts,
    pub ids: Vec<u8>,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Equal-frequency cuts over the sorted distinct values: with `m` distinct
/// values and `m > n_bins`, bin `b` holds distinct values
/// `[b*m/n_bins, (b+1)*m/n_bins)`. Never more bins than distinct values.
pub fn compute_cuts(column: &[f64], n_bins: usize) -> BinCuts {
    let n_bins = n_bins.clamp(1, MAX_BINS);
    let mut distinct = column.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let m = distinct.len();
    if m <= 1 {
        return BinCuts { edges: Vec::new() };
    }
    let groups = m.min(n_bins);
    let edges = (1..groups)
        .map(|b| {
            let start = b * m / groups;
            midpoint(distinct[start - 1], distinct[start])
        })
        .collect();
    BinCuts { edges }
}

pub fn build_bins(column: &[f64], n_bins: usize) -> BinnedColumn {
    let cuts = compute_cuts(column, n_bins);
    let ids = column.iter().map(|&x| cuts.bin(x)).collect();
    BinnedColumn { cuts, ids }
}

/// A feature matrix after binning, stored twice: column-major bin ids for
/// partitioning rows, and per-row lists of the entries that differ from each
/// feature's most common bin for sparse histogram accumulation.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    n_features: usize,
    cuts: Vec<BinCuts>,
    column_ids: Vec<u8>,
    default_bin: Vec<u8>,
    row_ptr: Vec<usize>,
    entry_feature: Vec<u32>,
    entry_bin: Vec<u8>,
    /// Histogram slot of bin 0 for each feature.
    offsets: Vec<usize>,
    /// Features with more than one bin.
    splittable: Vec<usize>,
}

impl BinnedMatrix {
    pub fn new(features: &Matrix, n_bins: usize) -> Self {
        let n_rows = features.rows();
        let n_features = features.cols();
        let mut cuts = Vec::with_capacity(n_features);
        let mut column_ids = Vec::with_capacity(n_rows * n_features);
        let mut default_bin = Vec::with_capacity(n_features);
        for j in 0..n_features {
            let binned = build_bins(&features.column(j), n_bins);
            let mut freq = vec![0usize; binned.cuts.n_bins()];
            for &b in &binned.ids {
                freq[b as usize] += 1;
            }
            let most_common =
                (0..freq.len()).fold(0, |best, b| if freq[b] > freq[best] { b } else { best });
            default_bin.push(most_common as u8);
            column_ids.extend_from_slice(&binned.ids);
            cuts.push(binned.cuts);
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut entry_feature = Vec::new();
        let mut entry_bin = Vec::new();
        row_ptr.push(0);
        for i in 0..n_rows {
            for j in 0..n_features {
                let b = column_ids[j * n_rows + i];
                if b != default_bin[j] {
                    entry_feature.push(j as u32);
                    entry_bin.push(b);
                }
            }
            row_ptr.push(entry_feature.len());
        }

        let mut offsets = Vec::with_capacity(n_features);
        let mut next = 0;
        for c in &cuts {
            offsets.push(next);
            next += c.n_bins();
        }
        let splittable = (0..n_features).filter(|&j| cuts[j].n_bins() > 1).collect();
        BinnedMatrix {
            n_rows,
            n_features,
            cuts,
            column_ids,
            default_bin,
            row_ptr,
            entry_feature,
            entry_bin,
            offsets,
            splittable,
        }
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn features(&self) -> usize {
        self.n_features
    }

    pub fn cuts(&self, feature: usize) -> &BinCuts {
        &self.cuts[feature]
    }

    pub fn bin(&self, row: usize, feature: usize) -> u8 {
        self.column_ids[feature * self.n_rows + row]
    }

    pub fn column(&self, feature: usize) -> &[u8] {
        &self.column_ids[feature * self.n_rows..(feature + 1) * self.n_rows]
    }

    pub(crate) fn default_bin(&self, feature: usize) -> u8 {
        self.default_bin[feature]
    }

    /// `(feature, bin)` pairs of `row` that are not in the feature's default bin.
    pub(crate) fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, u8)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.entry_feature[range.clone()]
            .iter()
            .zip(&self.entry_bin[range])
            .map(|(&f, &b)| (f as usize, b))
    }

    pub(crate) fn offset(&self, feature: usize) -> usize {
        self.offsets[feature]
    }

    pub(crate) fn total_bins(&self) -> usize {
        self.offsets
            .last()
            .map_or(0, |&o| o + self.cuts[self.n_features - 1].n_bins())
    }

    pub(crate) fn splittable(&self) -> &[usize] {
        &self.splittable
    }
}
