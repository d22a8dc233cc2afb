//! Stratified k-fold cross-validation and confusion-matrix metrics.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adaboost::{adaboost_fit, adaboost_predict, AdaBoostParams};
use crate::data::{Label, Task, TaskView, UserSelector};
use crate::error::{Error, Result};
use crate::gbt::class_list;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of every row.
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratify_on: Vec<Label>,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Within each class (ascending), shuffle the rows and deal them round-robin
/// into the folds. The dealer carries on from class to class, so fold sizes
/// differ by at most one row overall as well as per class.
pub fn make_folds(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k = {k}; need at least 2 folds"
        )));
    }
    if k > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} available rows",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next_fold = 0;
    for class in class_list(labels) {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        for row in rows {
            assignments[row] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
        stratify_on: labels.to_vec(),
    })
}

/// Rows are truth, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<Label>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    fn index(&self, class: Label) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class)
            .ok_or(Error::UnknownClass(class))
    }

    pub fn record(&mut self, truth: Label, predicted: Label) -> Result<()> {
        let (t, p) = (self.index(truth)?, self.index(predicted)?);
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        debug_assert_eq!(self.classes, other.classes);
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Rows whose true class is `class`.
    pub fn support(&self, class: Label) -> Result<u64> {
        Ok(self.counts[self.index(class)?].iter().sum())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Correct predictions over all predictions.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument(
            "accuracy of an empty confusion matrix".into(),
        ));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// TP / (TP + FP) for `class` against the rest; 0 when the class is never predicted.
pub fn class_precision(cm: &ConfusionMatrix, class: Label) -> Result<f64> {
    let c = cm.index(class)?;
    let predicted: u64 = cm.counts.iter().map(|row| row[c]).sum();
    Ok(ratio(cm.counts[c][c], predicted))
}

/// TP / (TP + FN) for `class` against the rest; 0 when the class never occurs.
pub fn class_recall(cm: &ConfusionMatrix, class: Label) -> Result<f64> {
    let c = cm.index(class)?;
    let actual: u64 = cm.counts[c].iter().sum();
    Ok(ratio(cm.counts[c][c], actual))
}

pub fn mse(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} truth values, {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument(
            "mean squared error of no values".into(),
        ));
    }
    let sum: f64 = truth
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    Ok(sum / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: Label,
    pub precision: f64,
    pub recall: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub task: Task,
    pub user: UserSelector,
    pub overall_accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub per_fold_accuracy: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub params: AdaBoostParams,
    pub folds: usize,
    pub fold_seed: u64,
}

impl EvaluationReport {
    pub fn support(&self) -> u64 {
        self.confusion.total()
    }

    /// `task,user,overall_accuracy` block, a blank line, then
    /// `class,precision,recall,support` rows in catalog order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("task,user,overall_accuracy\n");
        writeln!(
            out,
            "{},{},{:?}",
            self.task, self.user, self.overall_accuracy
        )
        .unwrap();
        out.push('\n');
        out.push_str("class,precision,recall,support\n");
        for m in &self.per_class {
            writeln!(
                out,
                "{},{:?},{:?},{}",
                m.class, m.precision, m.recall, m.support
            )
            .unwrap();
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let pct = |v: f64| format!("{:.2}%", 100.0 * v);
        let mut out = String::new();
        writeln!(out, "# {} task, user {}\n", self.task, self.user).unwrap();
        writeln!(out, "Overall accuracy: {}\n", pct(self.overall_accuracy)).unwrap();
        out.push_str("| Class | Precision | Recall | Support |\n|---|---|---|---|\n");
        for m in &self.per_class {
            writeln!(
                out,
                "| {} | {} | {} | {} |",
                m.class,
                pct(m.precision),
                pct(m.recall),
                m.support
            )
            .unwrap();
        }
        out.push_str("\n## Confusion matrix (rows = truth, columns = prediction)\n\n");
        let header: Vec<String> = self
            .confusion
            .classes
            .iter()
            .map(|c| c.to_string())
            .collect();
        writeln!(out, "| | {} |", header.join(" | ")).unwrap();
        writeln!(out, "|---|{}", "---|".repeat(header.len())).unwrap();
        for (class, row) in self.confusion.classes.iter().zip(&self.confusion.counts) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "| {} | {} |", class, cells.join(" | ")).unwrap();
        }
        out.push_str("\n## Folds\n\n");
        writeln!(out, "k = {}, fold seed = {}\n", self.folds, self.fold_seed).unwrap();
        for (f, acc) in self.per_fold_accuracy.iter().enumerate() {
            writeln!(out, "- fold {f}: {}", pct(*acc)).unwrap();
        }
        let g = &self.params.base_params;
        out.push_str("\n## Parameters\n\n");
        writeln!(out, "- adaboost rounds: {}", self.params.n_rounds).unwrap();
        writeln!(out, "- learner seed: {}", self.params.seed).unwrap();
        writeln!(out, "- trees: {}", g.n_trees).unwrap();
        writeln!(out, "- max depth: {}", g.max_depth).unwrap();
        writeln!(out, "- min rows per leaf: {}", g.min_rows_per_leaf).unwrap();
        writeln!(
            out,
            "- min split improvement: {:?}",
            g.min_split_improvement
        )
        .unwrap();
        writeln!(out, "- bins: {}", g.n_bins).unwrap();
        writeln!(out, "- learning rate: {:?}", g.learning_rate).unwrap();
        writeln!(out, "- sample rate: {:?}", g.sample_rate).unwrap();
        out
    }
}

/// Train on every fold but one, predict the held-out fold, and pool all
/// held-out predictions into one confusion matrix over `view.catalog`.
pub fn cross_validate(
    view: &TaskView<'_>,
    plan: &FoldPlan,
    params: &AdaBoostParams,
    user: UserSelector,
) -> Result<EvaluationReport> {
    let n = view.labels.len();
    if plan.assignments.len() != n || view.features.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "fold plan covers {} rows, task view has {n} labels and {} feature rows",
            plan.assignments.len(),
            view.features.rows()
        )));
    }
    params.validate()?;
    let catalog = view.catalog.clone();

    let folds: Vec<ConfusionMatrix> = (0..plan.k)
        .into_par_iter()
        .map(|fold| -> Result<ConfusionMatrix> {
            let train = plan.train_rows(fold);
            let test = plan.test_rows(fold);
            let features = view.features.select_rows(&train);
            let labels: Vec<Label> = train.iter().map(|&i| view.labels[i]).collect();
            let fold_params = AdaBoostParams {
                seed: derive_seed(params.seed, &[fold as u64]),
                ..*params
            };
            let model = adaboost_fit(&features, &labels, &fold_params)
                .map_err(|e| e.context(format!("fold {fold}")))?;
            let mut cm = ConfusionMatrix::new(catalog.clone());
            for &i in &test {
                cm.record(
                    view.labels[i],
                    adaboost_predict(&model, view.features.row(i))?,
                )?;
            }
            Ok(cm)
        })
        .collect::<Result<_>>()?;

    let mut confusion = ConfusionMatrix::new(catalog.clone());
    let mut per_fold_accuracy = Vec::with_capacity(plan.k);
    for cm in &folds {
        confusion.merge(cm);
        per_fold_accuracy.push(if cm.total() == 0 { 0.0 } else { accuracy(cm)? });
    }
    let per_class = catalog
        .iter()
        .map(|&class| {
            Ok(ClassMetrics {
                class,
                precision: class_precision(&confusion, class)?,
                recall: class_recall(&confusion, class)?,
                support: confusion.support(class)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EvaluationReport {
        task: view.task,
        user,
        overall_accuracy: accuracy(&confusion)?,
        per_class,
        per_fold_accuracy,
        confusion,
        params: *params,
        folds: plan.k,
        fold_seed: plan.seed,
    })
}
