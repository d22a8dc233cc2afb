//! Multinomial gradient-boosted regression trees.
//!
//! The model starts from log class priors and adds, at every stage, one
//! regression tree per class fitted to the softmax gradient `p - y`. Leaf
//! values take a single Newton step `-(K-1)/K * sum(w*g) / sum(w*h)` with
//! `h = p(1-p)`, and each stage is shrunk by the learning rate.

pub mod binning;
pub(crate) mod io;
pub mod split;
pub mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::derive_seed;

pub use binning::{build_bins, BinCuts, BinnedColumn, BinnedMatrix};
pub use split::{find_best_split, BinStats, SplitCandidate};
pub use tree::{Node, RegressionTree};

/// Fitting stops once every |p - y| is below this.
pub const GRADIENT_TOLERANCE: f64 = 1e-12;
/// Smallest class prior used for the initial scores.
const PRIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_rows_per_leaf: usize,
    pub min_split_improvement: f64,
    pub n_bins: usize,
    pub learning_rate: f64,
    pub sample_rate: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 50,
            max_depth: 5,
            min_rows_per_leaf: 10,
            min_split_improvement: 1e-5,
            n_bins: 20,
            learning_rate: 0.01,
            sample_rate: 1.0,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_trees == 0 {
            return bad("n_trees must be positive".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive".into());
        }
        if self.min_rows_per_leaf == 0 {
            return bad("min_rows_per_leaf must be positive".into());
        }
        if self.min_split_improvement.is_nan() || self.min_split_improvement < 0.0 {
            return bad(format!(
                "min_split_improvement {} must be >= 0",
                self.min_split_improvement
            ));
        }
        if self.n_bins == 0 || self.n_bins > binning::MAX_BINS {
            return bad(format!(
                "n_bins {} must be in 1..={}",
                self.n_bins,
                binning::MAX_BINS
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate {} must be a finite value >= 0",
                self.learning_rate
            ));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return bad(format!(
                "sample_rate {} must be in (0, 1]",
                self.sample_rate
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub classes: Vec<Label>,
    pub initial_scores: Vec<f64>,
    /// One tree per class per stage.
    pub stages: Vec<Vec<RegressionTree>>,
    pub params: GbtParams,
    pub feature_count: usize,
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Sorted distinct labels.
pub fn class_list(labels: &[Label]) -> Vec<Label> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    classes
}

pub(crate) fn check_finite(features: &Matrix) -> Result<()> {
    for (i, row) in features.iter_rows().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, feature: j });
        }
    }
    Ok(())
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {n} rows",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument(
            "sample weights must be finite and non-negative".into(),
        ));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidArgument("sample weights are all zero".into()));
    }
    Ok(())
}

pub fn gbt_fit(
    features: &Matrix,
    labels: &[Label],
    sample_weights: &[f64],
    params: &GbtParams,
) -> Result<GbtModel> {
    params.validate()?;
    if labels.len() != features.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            features.rows()
        )));
    }
    check_weights(sample_weights, features.rows())?;
    check_finite(features)?;
    let binned = BinnedMatrix::new(features, params.n_bins);
    gbt_fit_binned(&binned, labels, sample_weights, params)
}

/// Fit on an already binned matrix. Callers guarantee the inputs passed the
/// checks in [`gbt_fit`].
pub fn gbt_fit_binned(
    binned: &BinnedMatrix,
    labels: &[Label],
    sample_weights: &[f64],
    params: &GbtParams,
) -> Result<GbtModel> {
    params.validate()?;
    let n = binned.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    check_weights(sample_weights, n)?;

    let classes = class_list(labels);
    let k = classes.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no rows to fit".into()));
    }
    let targets: Vec<usize> = labels
        .iter()
        .map(|l| {
            classes
                .binary_search(l)
                .expect("label comes from the class list")
        })
        .collect();

    // Rescale to mean 1 so the hessian floor does not depend on the caller's
    // weight normalisation; every other quantity is scale-free.
    let scale = n as f64 / sample_weights.iter().sum::<f64>();
    let weights: Vec<f64> = sample_weights.iter().map(|w| w * scale).collect();

    let mut class_weight = vec![0.0; k];
    for (i, &t) in targets.iter().enumerate() {
        class_weight[t] += weights[i];
    }
    let total_weight: f64 = class_weight.iter().sum();
    let initial_scores: Vec<f64> = class_weight
        .iter()
        .map(|w| (w / total_weight).max(PRIOR_FLOOR).ln())
        .collect();

    let mut model = GbtModel {
        classes,
        initial_scores,
        stages: Vec::new(),
        params: *params,
        feature_count: binned.features(),
    };
    if k == 1 || params.learning_rate == 0.0 {
        return Ok(model);
    }

    let mut scores: Vec<f64> = (0..n)
        .flat_map(|_| model.initial_scores.iter().copied())
        .collect();
    let leaf_scale = (k - 1) as f64 / k as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[0x6762_7473]));
    let sample_size = ((n as f64 * params.sample_rate).round() as usize).clamp(1, n);

    for _stage in 0..params.n_trees {
        let mut gradients = vec![vec![0.0; n]; k];
        let mut hessians = vec![vec![0.0; n]; k];
        let mut max_gradient: f64 = 0.0;
        for i in 0..n {
            let p = softmax(&scores[i * k..(i + 1) * k]);
            for c in 0..k {
                let y = if targets[i] == c { 1.0 } else { 0.0 };
                let g = p[c] - y;
                gradients[c][i] = g;
                hessians[c][i] = p[c] * (1.0 - p[c]);
                max_gradient = max_gradient.max(g.abs());
            }
        }
        if max_gradient < GRADIENT_TOLERANCE {
            break;
        }

        let rows: Vec<usize> = if sample_size < n {
            let mut picked = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
            picked.sort_unstable();
            picked
        } else {
            (0..n).collect()
        };

        let trees: Vec<RegressionTree> = (0..k)
            .into_par_iter()
            .map(|c| {
                tree::TreeBuilder {
                    binned,
                    gradients: &gradients[c],
                    hessians: &hessians[c],
                    weights: &weights,
                    params,
                    leaf_scale,
                }
                .build(rows.clone())
            })
            .collect();

        for (c, tree) in trees.iter().enumerate() {
            for i in 0..n {
                scores[i * k + c] += params.learning_rate * tree.predict_binned(binned, i);
            }
        }
        model.stages.push(trees);
    }
    Ok(model)
}

impl GbtModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.feature_count {
            return Err(Error::DimensionMismatch(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.feature_count
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, feature: j });
        }
        Ok(())
    }

    /// Scores using only the first `n_stages` stages.
    pub fn predict_scores_at(&self, row: &[f64], n_stages: usize) -> Result<Vec<f64>> {
        self.check_row(row)?;
        let mut scores = self.initial_scores.clone();
        for stage in self.stages.iter().take(n_stages) {
            for (s, tree) in scores.iter_mut().zip(stage) {
                *s += self.params.learning_rate * tree.predict(row);
            }
        }
        Ok(scores)
    }
}

/// `F0 + learning_rate * (sum of per-class leaf values along the row's path)`.
pub fn gbt_predict_scores(model: &GbtModel, row: &[f64]) -> Result<Vec<f64>> {
    model.predict_scores_at(row, model.stages.len())
}

pub fn gbt_predict_proba(model: &GbtModel, row: &[f64]) -> Result<Vec<f64>> {
    Ok(softmax(&gbt_predict_scores(model, row)?))
}

pub fn gbt_predict(model: &GbtModel, row: &[f64]) -> Result<Label> {
    let scores = gbt_predict_scores(model, row)?;
    Ok(model.classes[argmax(&scores)])
}

/// Weighted mean multinomial deviance of the model truncated to `n_stages`.
pub fn log_loss_at(
    model: &GbtModel,
    features: &Matrix,
    labels: &[Label],
    weights: &[f64],
    n_stages: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut wsum = 0.0;
    for (i, row) in features.iter_rows().enumerate() {
        let p = softmax(&model.predict_scores_at(row, n_stages)?);
        let c = model
            .classes
            .binary_search(&labels[i])
            .map_err(|_| Error::UnknownClass(labels[i]))?;
        total -= weights[i] * p[c].max(f64::MIN_POSITIVE).ln();
        wsum += weights[i];
    }
    Ok(total / wsum)
}
