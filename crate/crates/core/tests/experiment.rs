mod common;

use std::fs;

use indoorboost::data::{self, GroupAttr, IngestConfig, Task, UserSelector};
use indoorboost::experiment::{
    compare_accuracies, emit_figure_counts, run_experiment, ExperimentConfig, UserSpec,
};
use indoorboost::gbt::GbtParams;

fn small_config(dir: &std::path::Path, task: Task, users: UserSpec) -> ExperimentConfig {
    let data = dir.join("data.csv");
    common::write(&data, &common::Synth::default());
    ExperimentConfig {
        data_path: data,
        task,
        users,
        folds: 3,
        adaboost_rounds: 2,
        gbt: GbtParams {
            n_trees: 5,
            learning_rate: 0.3,
            min_rows_per_leaf: 2,
            ..GbtParams::default()
        },
        seed: 7,
        output_dir: dir.join("out"),
    }
}

const FLOOR_AVERAGE: f64 = 89.16;
const FLOOR_USERS: [f64; 18] = [
    95.69, 100.0, 100.0, 100.0, 100.0, 100.0, 98.12, 100.0, 99.44, 100.0, 94.13, 100.0, 100.0,
    99.37, 100.0, 98.06, 100.0, 100.0,
];
const REGION_AVERAGE: f64 = 77.17;
const REGION_USERS: [f64; 18] = [
    100.0, 91.29, 100.0, 96.51, 99.51, 99.69, 88.14, 94.29, 96.71, 95.72, 95.59, 96.56, 100.0,
    99.00, 92.58, 96.32, 94.47, 97.05,
];

fn reported(average: f64, users: &[f64]) -> Vec<(UserSelector, f64)> {
    users
        .iter()
        .enumerate()
        .map(|(i, &a)| (UserSelector::Specific(i as i64 + 1), a / 100.0))
        .chain(std::iter::once((UserSelector::Average, average / 100.0)))
        .collect()
}

#[test]
fn reported_floor_accuracies_all_exceed_average() {
    let rows = compare_accuracies(&reported(FLOOR_AVERAGE, &FLOOR_USERS)).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r.exceeds));
    assert_eq!(
        rows.iter().map(|r| r.user_id).collect::<Vec<_>>(),
        (1..=18).collect::<Vec<_>>()
    );
}

#[test]
fn reported_region_accuracies_all_exceed_average() {
    let rows = compare_accuracies(&reported(REGION_AVERAGE, &REGION_USERS)).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r.exceeds));
}

#[test]
fn all_users_region_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), Task::Region, UserSpec::All);
    let manifest = run_experiment(&cfg).unwrap();
    assert_eq!(manifest.runs.len(), 4);
    assert_eq!(manifest.dataset_users, 3);
    let out = &cfg.output_dir;
    for r in &manifest.runs {
        assert!(out.join(&r.report_csv).is_file());
        assert!(out.join(&r.report_markdown).is_file());
    }
    for f in &manifest.files {
        assert!(out.join(f).is_file(), "{f}");
    }
    let reports = fs::read_dir(out)
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().into_string().unwrap();
            name.starts_with("report_region_") && name.ends_with(".csv")
        })
        .count();
    assert_eq!(reports, 4);
    let comparison = fs::read_to_string(out.join("comparison_region.csv")).unwrap();
    let lines: Vec<&str> = comparison.lines().collect();
    assert_eq!(lines[0], "user_id,user_accuracy,average_accuracy,exceeds");
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        let last = l.rsplit(',').next().unwrap();
        assert!(last == "true" || last == "false");
    }
    assert!(out.join("manifest_region.json").is_file());
    assert!(out.join("summary_region.md").is_file());
}

#[test]
fn per_user_supports_sum_to_average_support() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), Task::Floor, UserSpec::All);
    let manifest = run_experiment(&cfg).unwrap();
    let average = manifest.runs.iter().find(|r| r.user == "average").unwrap();
    let users: usize = manifest
        .runs
        .iter()
        .filter(|r| r.user != "average")
        .map(|r| r.rows)
        .sum();
    assert_eq!(users, average.rows);

    let csv = fs::read_to_string(cfg.output_dir.join("report_floor_average.csv")).unwrap();
    let classes: Vec<&str> = csv
        .lines()
        .skip_while(|l| !l.starts_with("class,"))
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(classes, ["0", "1", "2", "3", "4"]);
    let md = fs::read_to_string(cfg.output_dir.join("report_floor_user01.md")).unwrap();
    assert!(md.contains("0.00%"), "absent floors are listed at 0.00%");
}

#[test]
fn unknown_user_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), Task::Floor, UserSpec::Specific(99));
    let err = run_experiment(&cfg).unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("99"));
    assert!(!cfg.output_dir.exists());
}

#[test]
fn tiny_user_downgrades_folds_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), Task::Region, UserSpec::Specific(2));
    common::write(
        &cfg.data_path,
        &common::Synth {
            rows_per_user: 6,
            ..common::Synth::default()
        },
    );
    cfg.folds = 10;
    let manifest = run_experiment(&cfg).unwrap();
    assert_eq!(manifest.runs[0].folds, 6);
    assert_eq!(manifest.warnings.len(), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small_config(a.path(), Task::Floor, UserSpec::All);
    let cb = small_config(b.path(), Task::Floor, UserSpec::All);
    let ma = run_experiment(&ca).unwrap();
    run_experiment(&cb).unwrap();
    for r in &ma.runs {
        for name in [&r.report_csv, &r.report_markdown] {
            assert_eq!(
                fs::read(ca.output_dir.join(name)).unwrap(),
                fs::read(cb.output_dir.join(name)).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn figure_counts_are_marginally_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    common::write(
        &path,
        &common::Synth {
            users: 4,
            rows_per_user: 25,
            ..common::Synth::default()
        },
    );
    let ds = data::load(&path, &IngestConfig::default()).unwrap();
    let files = emit_figure_counts(&ds, &dir.path().join("counts")).unwrap();
    assert_eq!(files.len(), 4);
    let mut totals = Vec::new();
    for (attr, file) in GroupAttr::ALL.iter().zip(&files) {
        let text = fs::read_to_string(file).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("user_id,group_attr,group_value,count"));
        let mut per_user = std::collections::BTreeMap::new();
        for l in lines {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[1], attr.name());
            *per_user
                .entry(f[0].parse::<i64>().unwrap())
                .or_insert(0usize) += f[3].parse::<usize>().unwrap();
        }
        totals.push(per_user);
    }
    assert!(totals.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(totals[0].values().sum::<usize>(), 100);
}
