use super::binning::BinnedMatrix;
use super::split::{scan_histogram, BinStats, SplitCandidate};
use super::GbtParams;

/// Newton denominators are floored here so pure leaves stay finite.
pub const HESSIAN_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        /// Training-time bin boundary: bin ids `<= bin` go left.
        bin: u8,
        /// Raw-value boundary: values `<= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
            depth: 0,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub(crate) fn predict_binned(&self, binned: &BinnedMatrix, row: usize) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    bin,
                    left,
                    right,
                    ..
                } => {
                    at = if binned.bin(row, feature) <= bin {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Features referenced by any split.
    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

pub(crate) struct TreeBuilder<'a> {
    pub binned: &'a BinnedMatrix,
    pub gradients: &'a [f64],
    pub hessians: &'a [f64],
    pub weights: &'a [f64],
    pub params: &'a GbtParams,
    /// Multiplier on the Newton step, (K-1)/K for K classes.
    pub leaf_scale: f64,
}

struct Best {
    feature: usize,
    split: SplitCandidate,
}

impl TreeBuilder<'_> {
    pub fn build(&self, rows: Vec<usize>) -> RegressionTree {
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            depth: 0,
        };
        let total = self.totals(&rows);
        let hist = self.histogram(&rows, &total);
        self.grow(&mut tree, rows, total, hist, 0);
        tree
    }

    fn leaf_value(&self, total: &BinStats) -> f64 {
        -self.leaf_scale * total.grad / total.hess.max(HESSIAN_FLOOR)
    }

    fn totals(&self, rows: &[usize]) -> BinStats {
        let mut t = BinStats::default();
        for &i in rows {
            t.add(self.weights[i], self.gradients[i], self.hessians[i]);
        }
        t
    }

    /// Non-default bins accumulate row by row; each default bin is the node
    /// total minus the feature's other bins.
    fn histogram(&self, rows: &[usize], total: &BinStats) -> Vec<BinStats> {
        let binned = self.binned;
        let mut hist = vec![BinStats::default(); binned.total_bins()];
        for &i in rows {
            let (w, g, h) = (self.weights[i], self.gradients[i], self.hessians[i]);
            for (f, b) in binned.row_entries(i) {
                hist[binned.offset(f) + b as usize].add(w, g, h);
            }
        }
        for &f in binned.splittable() {
            let start = binned.offset(f);
            let slots = &mut hist[start..start + binned.cuts(f).n_bins()];
            let default = binned.default_bin(f) as usize;
            let mut rest = BinStats::default();
            for (b, s) in slots.iter().enumerate() {
                if b != default {
                    rest.merge(s);
                }
            }
            slots[default] = total.minus(&rest);
        }
        hist
    }

    fn best_split(&self, hist: &[BinStats], total: &BinStats) -> Option<Best> {
        let mut best: Option<Best> = None;
        for &f in self.binned.splittable() {
            let start = self.binned.offset(f);
            let slots = &hist[start..start + self.binned.cuts(f).n_bins()];
            if let Some(split) = scan_histogram(slots, total, self.params) {
                if best
                    .as_ref()
                    .is_none_or(|b| split.improvement > b.split.improvement)
                {
                    best = Some(Best { feature: f, split });
                }
            }
        }
        best
    }

    fn grow(
        &self,
        tree: &mut RegressionTree,
        rows: Vec<usize>,
        total: BinStats,
        mut hist: Vec<BinStats>,
        depth: usize,
    ) -> usize {
        let at = tree.nodes.len();
        tree.depth = tree.depth.max(depth);
        tree.nodes.push(Node::Leaf {
            value: self.leaf_value(&total),
        });
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_rows_per_leaf {
            return at;
        }
        let Some(Best { feature, split }) = self.best_split(&hist, &total) else {
            return at;
        };

        let column = self.binned.column(feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| column[i] <= split.bin);
        let left_total = self.totals(&left_rows);
        let right_total = self.totals(&right_rows);

        let (left_hist, right_hist) = if left_rows.len() <= right_rows.len() {
            let small = self.histogram(&left_rows, &left_total);
            subtract_in_place(&mut hist, &small);
            (small, hist)
        } else {
            let small = self.histogram(&right_rows, &right_total);
            subtract_in_place(&mut hist, &small);
            (hist, small)
        };

        let left = self.grow(tree, left_rows, left_total, left_hist, depth + 1);
        let right = self.grow(tree, right_rows, right_total, right_hist, depth + 1);
        tree.nodes[at] = Node::Split {
            feature,
            bin: split.bin,
            threshold: self.binned.cuts(feature).edges[split.bin as usize],
            left,
            right,
        };
        at
    }
}

fn subtract_in_place(parent: &mut [BinStats], child: &[BinStats]) {
    for (p, c) in parent.iter_mut().zip(child) {
        *p = p.minus(c);
    }
}
