mod oracles;

use indoorboost::adaboost::{adaboost_fit_traced, adaboost_predict, AdaBoostParams};
use indoorboost::data::{Label, Task, TaskView, UserSelector};
use indoorboost::eval::{cross_validate, make_folds};
use indoorboost::gbt::{gbt_fit, log_loss_at, GbtParams};
use indoorboost::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.gen_range(-100.0..0.0))
            .collect(),
    )
    .unwrap()
}

#[test]
fn gbt_beats_best_stump_on_checkerboard() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
        .collect();
    let labels: Vec<Label> = rows
        .iter()
        .map(|r| ((r[0] > 0.5) ^ (r[1] > 0.5)) as Label)
        .collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let params = GbtParams {
        n_trees: 50,
        max_depth: 3,
        learning_rate: 0.3,
        min_rows_per_leaf: 5,
        ..GbtParams::default()
    };
    let model = gbt_fit(&x, &labels, &[1.0; 200], &params).unwrap();
    let gbt = log_loss_at(&model, &x, &labels, &[1.0; 200], model.stages.len()).unwrap();
    let stump = oracles::best_stump_log_loss(&x, &labels);
    assert!(gbt < stump, "gbt {gbt} vs stump {stump}");
}

#[test]
fn adaboost_on_random_labels_is_at_least_majority_on_training_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_matrix(&mut rng, 500, 6);
    let labels: Vec<Label> = (0..500).map(|_| rng.gen_range(0..4)).collect();
    let params = AdaBoostParams {
        n_rounds: 5,
        base_params: GbtParams {
            n_trees: 10,
            learning_rate: 0.1,
            ..GbtParams::default()
        },
        seed: 5,
    };
    let (model, trace) = adaboost_fit_traced(&x, &labels, &params).unwrap();
    assert!(model.rounds.len() <= 5);
    assert_eq!(trace.errors.len(), model.rounds.len());
    let correct = (0..500)
        .filter(|&i| adaboost_predict(&model, x.row(i)).unwrap() == labels[i])
        .count();
    let majority = (0..4)
        .map(|c| labels.iter().filter(|&&l| l == c).count())
        .max()
        .unwrap();
    assert!(
        correct >= majority,
        "{correct} correct, majority class has {majority}"
    );
}

#[test]
fn cross_validation_on_independent_labels_is_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = random_matrix(&mut rng, 300, 5);
    let labels: Vec<Label> = (0..300).map(|_| 1 + rng.gen_range(0..2)).collect();
    let view = TaskView {
        task: Task::Region,
        features: &x,
        labels: labels.clone(),
        catalog: vec![1, 2],
    };
    let plan = make_folds(&labels, 5, 1).unwrap();
    let params = AdaBoostParams {
        n_rounds: 3,
        base_params: GbtParams {
            n_trees: 10,
            learning_rate: 0.1,
            ..GbtParams::default()
        },
        seed: 2,
    };
    let report = cross_validate(&view, &plan, &params, UserSelector::Average).unwrap();
    assert!(
        (0.35..=0.65).contains(&report.overall_accuracy),
        "{}",
        report.overall_accuracy
    );
    assert_eq!(report.support(), 300);
}

#[test]
fn pooled_confusion_ignores_row_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..120)
        .map(|i| {
            vec![
                (i % 3) as f64 * -20.0 + rng.gen_range(-5.0..5.0),
                rng.gen_range(-9.0..0.0),
            ]
        })
        .collect();
    let labels: Vec<Label> = (0..120).map(|i| (i % 3) as Label).collect();
    let params = AdaBoostParams {
        n_rounds: 2,
        base_params: GbtParams {
            n_trees: 5,
            learning_rate: 0.2,
            min_rows_per_leaf: 3,
            ..GbtParams::default()
        },
        seed: 4,
    };
    let x = Matrix::from_rows(&rows).unwrap();
    let plan = make_folds(&labels, 4, 9).unwrap();
    let view = TaskView {
        task: Task::Floor,
        features: &x,
        labels: labels.clone(),
        catalog: vec![0, 1, 2, 3, 4],
    };
    let a = cross_validate(&view, &plan, &params, UserSelector::Average).unwrap();

    // Reverse the rows and carry each row's fold with it.
    let perm: Vec<usize> = (0..120).rev().collect();
    let xp = x.select_rows(&perm);
    let lp: Vec<Label> = perm.iter().map(|&i| labels[i]).collect();
    let mut plan_p = plan.clone();
    plan_p.assignments = perm.iter().map(|&i| plan.assignments[i]).collect();
    plan_p.stratify_on = lp.clone();
    let view_p = TaskView {
        task: Task::Floor,
        features: &xp,
        labels: lp,
        catalog: vec![0, 1, 2, 3, 4],
    };
    let b = cross_validate(&view_p, &plan_p, &params, UserSelector::Average).unwrap();
    assert_eq!(a.confusion, b.confusion);
}
