//! Multiclass AdaBoost (SAMME) with the gradient-boosted tree model as the
//! base learner.
//!
//! Row weights start uniform. Each round fits the base learner with the
//! current weights, measures its weighted training error `e`, and gets the
//! vote `alpha = ln((1 - e) / e) + ln(K - 1)`. Misclassified rows are scaled
//! by `exp(alpha)` and the weights renormalised. A round with
//! `e >= (K - 1) / K` is discarded and boosting stops; a perfect round is
//! kept with a capped vote and boosting stops.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::gbt::io::{read_gbt, Lines};
use crate::gbt::{
    argmax, check_finite, class_list, gbt_fit_binned, gbt_predict, BinnedMatrix, GbtModel,
    GbtParams,
};
use crate::matrix::Matrix;
use crate::seed::derive_seed;

/// Weight sums must be within this of 1.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
    pub base_params: GbtParams,
    pub seed: u64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_rounds: 10,
            base_params: GbtParams::default(),
            seed: 0,
        }
    }
}

impl AdaBoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidArgument("n_rounds must be at least 1".into()));
        }
        self.base_params.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostRound {
    pub base: GbtModel,
    pub alpha: f64,
    /// Weighted training error of this round's base learner.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostModel {
    pub rounds: Vec<BoostRound>,
    pub classes: Vec<Label>,
    /// Unweighted training error of the whole ensemble.
    pub final_training_error: f64,
    /// Log class priors; decide the class when no round was retained.
    pub prior_scores: Vec<f64>,
    pub params: AdaBoostParams,
}

/// Per-round diagnostics from [`adaboost_fit_traced`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    /// Row weights each round was fitted with, followed by the weights left
    /// after the last update.
    pub weights: Vec<Vec<f64>>,
    /// Weighted error of every fitted base learner, discarded ones included.
    pub errors: Vec<f64>,
    /// Training-row predictions of every fitted base learner.
    pub predictions: Vec<Vec<Label>>,
}

/// Vote given to a perfect round.
pub fn alpha_cap(k: usize) -> f64 {
    (1e9 * (k.max(2) - 1) as f64).ln()
}

pub fn samme_alpha(error: f64, k: usize) -> f64 {
    let cap = alpha_cap(k);
    if error <= 0.0 {
        return cap;
    }
    (((1.0 - error) / error).ln() + ((k - 1) as f64).ln()).min(cap)
}

/// Sum of weights over misclassified rows.
pub fn weighted_error(predictions: &[Label], truth: &[Label], weights: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() || truth.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions, {} labels, {} weights",
            predictions.len(),
            truth.len(),
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    let error: f64 = predictions
        .iter()
        .zip(truth)
        .zip(weights)
        .filter(|((p, t), _)| p != t)
        .map(|(_, w)| w)
        .sum();
    Ok(error.clamp(0.0, 1.0))
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn normalise(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
}

pub fn adaboost_fit(
    features: &Matrix,
    labels: &[Label],
    params: &AdaBoostParams,
) -> Result<AdaBoostModel> {
    adaboost_fit_traced(features, labels, params).map(|(model, _)| model)
}

pub fn adaboost_fit_traced(
    features: &Matrix,
    labels: &[Label],
    params: &AdaBoostParams,
) -> Result<(AdaBoostModel, FitTrace)> {
    params.validate()?;
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no rows to fit".into()));
    }
    check_finite(features)?;

    let classes = class_list(labels);
    let k = classes.len();
    let mut class_count = vec![0usize; k];
    for l in labels {
        class_count[classes.binary_search(l).expect("label in class list")] += 1;
    }
    let prior_scores = class_count
        .iter()
        .map(|&c| (c as f64 / n as f64).ln())
        .collect();
    let mut model = AdaBoostModel {
        rounds: Vec::new(),
        classes,
        final_training_error: 0.0,
        prior_scores,
        params: *params,
    };
    let mut trace = FitTrace::default();
    if k == 1 {
        return Ok((model, trace));
    }

    let binned = BinnedMatrix::new(features, params.base_params.n_bins);
    let chance_error = (k - 1) as f64 / k as f64;
    let mut weights = uniform(n);

    for round in 0..params.n_rounds {
        trace.weights.push(weights.clone());
        let base_params = GbtParams {
            seed: derive_seed(params.seed, &[round as u64]),
            ..params.base_params
        };
        let base = gbt_fit_binned(&binned, labels, &weights, &base_params)?;
        let predictions = features
            .iter_rows()
            .map(|row| gbt_predict(&base, row))
            .collect::<Result<Vec<Label>>>()?;
        let error = weighted_error(&predictions, labels, &weights)?;
        trace.errors.push(error);
        trace.predictions.push(predictions.clone());

        if error >= chance_error {
            log::debug!("round {round}: error {error:.4} >= {chance_error:.4}, discarded");
            weights = uniform(n);
            break;
        }
        let alpha = samme_alpha(error, k);
        model.rounds.push(BoostRound { base, alpha, error });
        if error == 0.0 {
            break;
        }
        let boost = alpha.exp();
        for ((w, p), t) in weights.iter_mut().zip(&predictions).zip(labels) {
            if p != t {
                *w *= boost;
            }
        }
        normalise(&mut weights);
    }
    trace.weights.push(weights);

    let mut wrong = 0usize;
    for (row, label) in features.iter_rows().zip(labels) {
        if adaboost_predict(&model, row)? != *label {
            wrong += 1;
        }
    }
    model.final_training_error = wrong as f64 / n as f64;
    Ok((model, trace))
}

/// Sum of `alpha` per class over the rounds that predict it.
pub fn adaboost_votes(model: &AdaBoostModel, row: &[f64]) -> Result<Vec<f64>> {
    let mut votes = vec![0.0; model.classes.len()];
    for round in &model.rounds {
        let label = gbt_predict(&round.base, row)?;
        let c = model
            .classes
            .binary_search(&label)
            .map_err(|_| Error::UnknownClass(label))?;
        votes[c] += round.alpha;
    }
    Ok(votes)
}

pub fn adaboost_predict(model: &AdaBoostModel, row: &[f64]) -> Result<Label> {
    if model.rounds.is_empty() {
        return Ok(model.classes[argmax(&model.prior_scores)]);
    }
    Ok(model.classes[argmax(&adaboost_votes(model, row)?)])
}

const ADA_MAGIC: &str = "indoorboost-adaboost";
const ADA_VERSION: u32 = 1;

impl AdaBoostModel {
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        let io = |e| Error::io("<model stream>", e);
        let params = serde_json::to_string(&self.params).expect("params serialize");
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(out, "{ADA_MAGIC} {ADA_VERSION}").map_err(io)?;
        let classes: Vec<String> = self.classes.iter().map(|c| c.to_string()).collect();
        writeln!(out, "classes {} {}", classes.len(), classes.join(" ")).map_err(io)?;
        writeln!(out, "params {params}").map_err(io)?;
        writeln!(out, "prior_scores {}", fmt(&self.prior_scores)).map_err(io)?;
        writeln!(out, "final_training_error {:?}", self.final_training_error).map_err(io)?;
        writeln!(out, "rounds {}", self.rounds.len()).map_err(io)?;
        for (i, round) in self.rounds.iter().enumerate() {
            writeln!(out, "round {i} {:?} {:?}", round.alpha, round.error).map_err(io)?;
            round.base.write_to(out)?;
        }
        writeln!(out, "end").map_err(io)
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<AdaBoostModel> {
        let mut lines = Lines::new(input);
        let t = lines.expect(ADA_MAGIC)?;
        let version: u32 = lines.parse_all(&t, 1)?[0];
        if version != ADA_VERSION {
            return Err(lines.error(format!("unsupported version {version}")));
        }
        let t = lines.expect("classes")?;
        let k: usize = lines.parse(t.first().map_or("", String::as_str))?;
        let classes: Vec<Label> = lines.parse_all(&t[1..], k)?;
        let json = lines.rest("params")?;
        let params: AdaBoostParams =
            serde_json::from_str(&json).map_err(|e| lines.error(format!("bad params: {e}")))?;
        let t = lines.expect("prior_scores")?;
        let prior_scores = lines.parse_all(&t, k)?;
        let t = lines.expect("final_training_error")?;
        let final_training_error = lines.parse_all(&t, 1)?[0];
        let t = lines.expect("rounds")?;
        let n_rounds: usize = lines.parse_all(&t, 1)?[0];
        let mut rounds = Vec::with_capacity(n_rounds);
        for i in 0..n_rounds {
            let t = lines.expect("round")?;
            if t.len() != 3 || lines.parse::<usize>(&t[0])? != i {
                return Err(lines.error(format!("malformed header for round {i}")));
            }
            let alpha = lines.parse(&t[1])?;
            let error = lines.parse(&t[2])?;
            let base = read_gbt(&mut lines)?;
            if base.classes != classes {
                return Err(lines.error(format!("round {i} has a different class list")));
            }
            rounds.push(BoostRound { base, alpha, error });
        }
        lines.expect("end")?;
        Ok(AdaBoostModel {
            rounds,
            classes,
            final_training_error,
            prior_scores,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::{GbtParams, RegressionTree};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weighted_error_cases() {
        assert_eq!(weighted_error(&[1, 2], &[1, 2], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(weighted_error(&[2, 1], &[1, 2], &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(
            weighted_error(&[0, 1, 1, 1], &[1, 1, 1, 1], &[0.25; 4]).unwrap(),
            0.25
        );
        assert!(matches!(
            weighted_error(&[0], &[0, 1], &[0.5, 0.5]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            weighted_error(&[0, 1], &[0, 1], &[0.5, 0.6]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn alpha_formula() {
        assert!((samme_alpha(0.25, 2) - 3f64.ln()).abs() < 1e-15);
        assert!((samme_alpha(0.25, 5) - (3f64.ln() + 4f64.ln())).abs() < 1e-15);
        assert_eq!(samme_alpha(0.0, 3), (2e9f64).ln());
    }

    fn separable() -> (Matrix, Vec<Label>) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 - 19.5]).collect();
        let labels = rows
            .iter()
            .map(|r| if r[0] > 0.0 { 1 } else { 0 })
            .collect();
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn perfect_first_round_stops() {
        let (x, y) = separable();
        let model = adaboost_fit(&x, &y, &AdaBoostParams::default()).unwrap();
        assert_eq!(model.rounds.len(), 1);
        assert_eq!(model.rounds[0].alpha, alpha_cap(2));
        assert_eq!(model.final_training_error, 0.0);
    }

    #[test]
    fn single_class_gives_constant_model() {
        let (x, _) = separable();
        let model = adaboost_fit(&x, &[4; 40], &AdaBoostParams::default()).unwrap();
        assert!(model.rounds.is_empty());
        assert_eq!(adaboost_predict(&model, &[123.0]).unwrap(), 4);
    }

    fn constant_base(classes: Vec<Label>, winner: usize) -> GbtModel {
        let mut initial_scores = vec![0.0; classes.len()];
        initial_scores[winner] = 1.0;
        GbtModel {
            classes,
            initial_scores,
            stages: vec![vec![RegressionTree::leaf(0.0), RegressionTree::leaf(0.0)]],
            params: GbtParams::default(),
            feature_count: 1,
        }
    }

    #[test]
    fn heavier_vote_wins() {
        let classes = vec![0, 1];
        let model = AdaBoostModel {
            rounds: vec![
                BoostRound {
                    base: constant_base(classes.clone(), 1),
                    alpha: 2.0,
                    error: 0.1,
                },
                BoostRound {
                    base: constant_base(classes.clone(), 0),
                    alpha: 1.0,
                    error: 0.2,
                },
            ],
            classes,
            final_training_error: 0.0,
            prior_scores: vec![0.0, 0.0],
            params: AdaBoostParams::default(),
        };
        assert_eq!(adaboost_predict(&model, &[0.0]).unwrap(), 1);
        assert_eq!(adaboost_votes(&model, &[0.0]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(
            adaboost_predict(&model, &[0.0, 1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    fn noisy(seed: u64, n: usize, k: i64) -> (Matrix, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels = rows
            .iter()
            .map(|r| {
                if rng.gen_bool(0.25) {
                    rng.gen_range(0..k)
                } else {
                    (((r[0] + 1.0) / 2.0 * k as f64) as i64).min(k - 1)
                }
            })
            .collect();
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn one_round_equals_the_base_model() {
        let (x, y) = noisy(1, 200, 3);
        let params = AdaBoostParams {
            n_rounds: 1,
            ..AdaBoostParams::default()
        };
        let model = adaboost_fit(&x, &y, &params).unwrap();
        assert_eq!(model.rounds.len(), 1);
        for row in x.iter_rows() {
            assert_eq!(
                adaboost_predict(&model, row).unwrap(),
                gbt_predict(&model.rounds[0].base, row).unwrap()
            );
        }
    }

    #[test]
    fn weight_laws_hold() {
        let (x, y) = noisy(2, 300, 4);
        let (model, trace) = adaboost_fit_traced(&x, &y, &AdaBoostParams::default()).unwrap();
        for w in &trace.weights {
            assert!(w.iter().all(|&v| v >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for round in &model.rounds {
            assert!(round.alpha > 0.0);
            assert!(round.error < 0.75);
        }
        // relative weight of misclassified rows never falls
        for r in 0..model.rounds.len().min(trace.weights.len() - 1) {
            let (before, after) = (&trace.weights[r], &trace.weights[r + 1]);
            let growth = |i: usize| after[i] / before[i];
            let (mut wrong_min, mut right_max) = (f64::INFINITY, 0.0f64);
            for (i, (p, t)) in trace.predictions[r].iter().zip(&y).enumerate() {
                if p != t {
                    wrong_min = wrong_min.min(growth(i));
                } else {
                    right_max = right_max.max(growth(i));
                }
            }
            assert!(wrong_min >= right_max * (1.0 - 1e-12));
        }
    }

    #[test]
    fn model_file_round_trip() {
        let (x, y) = noisy(3, 150, 3);
        let params = AdaBoostParams {
            n_rounds: 3,
            base_params: GbtParams {
                n_trees: 5,
                learning_rate: 0.2,
                ..GbtParams::default()
            },
            seed: 5,
        };
        let model = adaboost_fit(&x, &y, &params).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = AdaBoostModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        assert!(AdaBoostModel::read_from(&buf[..buf.len() / 2]).is_err());
    }
}
