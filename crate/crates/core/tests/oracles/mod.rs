//! Independent reference computations that the library is checked against.
#![allow(dead_code)]

use std::collections::BTreeMap;

use indoorboost::data::Label;
use indoorboost::eval::FoldPlan;
use indoorboost::Matrix;

/// Subsets of an `eta`-element set: (all, containing a fixed `q`-element core).
pub fn enumerate_subsets(eta: u32, q: u32) -> (u64, u64) {
    let core: u64 = (1u64 << q) - 1;
    let mut all = 0;
    let mut reaching = 0;
    for subset in 0..(1u64 << eta) {
        all += 1;
        if subset & core == core {
            reaching += 1;
        }
    }
    (all, reaching)
}

/// Precision and recall of `class` from raw (truth, predicted) pairs.
pub fn tally(pairs: &[(Label, Label)], class: Label) -> (f64, f64) {
    let tp = pairs
        .iter()
        .filter(|&&(t, p)| t == class && p == class)
        .count();
    let predicted = pairs.iter().filter(|&&(_, p)| p == class).count();
    let actual = pairs.iter().filter(|&&(t, _)| t == class).count();
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (div(tp, predicted), div(tp, actual))
}

pub fn tally_accuracy(pairs: &[(Label, Label)]) -> f64 {
    pairs.iter().filter(|(t, p)| t == p).count() as f64 / pairs.len() as f64
}

/// Describe the first violated fold law, if any.
pub fn fold_law_violation(labels: &[Label], plan: &FoldPlan) -> Option<String> {
    let n = labels.len();
    let mut seen = vec![0usize; n];
    for fold in 0..plan.k {
        for i in plan.test_rows(fold) {
            seen[i] += 1;
        }
        let train = plan.train_rows(fold);
        let test = plan.test_rows(fold);
        if train.len() + test.len() != n {
            return Some(format!("fold {fold}: train and test do not cover the rows"));
        }
        if test.iter().any(|i| train.contains(i)) {
            return Some(format!("fold {fold}: train and test overlap"));
        }
    }
    if let Some(i) = seen.iter().position(|&c| c != 1) {
        return Some(format!("row {i} appears in {} test folds", seen[i]));
    }
    let mut per_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        per_class.entry(l).or_insert_with(|| vec![0; plan.k])[plan.assignments[i]] += 1;
    }
    for (class, counts) in per_class {
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        if hi - lo > 1 {
            return Some(format!("class {class}: fold counts {counts:?}"));
        }
    }
    None
}

/// Training log-loss of the best single split on one feature, each side
/// predicting its own class frequencies. Also covers the no-split case.
pub fn best_stump_log_loss(x: &Matrix, labels: &[Label]) -> f64 {
    fn side_loss(labels: &[Label]) -> f64 {
        let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let n = labels.len() as f64;
        counts
            .values()
            .map(|&c| -(c as f64) * (c as f64 / n).ln())
            .sum()
    }
    let n = labels.len();
    let mut best = side_loss(labels);
    for j in 0..x.cols() {
        let mut values = x.column(j);
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let goes_left = |i: usize| x.get(i, j) <= t;
            let l: Vec<Label> = (0..n)
                .filter(|&i| goes_left(i))
                .map(|i| labels[i])
                .collect();
            let r: Vec<Label> = (0..n)
                .filter(|&i| !goes_left(i))
                .map(|i| labels[i])
                .collect();
            best = best.min(side_loss(&l) + side_loss(&r));
        }
    }
    best / n as f64
}
