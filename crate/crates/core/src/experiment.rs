//! Per-user and average-user experiment orchestration.
//!
//! A run evaluates one (user selection, task) pair with stratified k-fold
//! cross-validation of the boosted model and writes a metrics CSV plus a
//! markdown table. With `users = all`, every user in the file gets a run and
//! so does the pooled "average user"; a comparison table then records which
//! per-user models beat the pooled one.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::adaboost::AdaBoostParams;
use crate::data::{self, Dataset, GroupAttr, IngestConfig, Task, UserSelector};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, make_folds, EvaluationReport};
use crate::gbt::GbtParams;
use crate::seed::{derive_seed, tag};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserSpec {
    All,
    Average,
    Specific(i64),
}

impl FromStr for UserSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(UserSpec::All),
            "average" => Ok(UserSpec::Average),
            id => id.parse().map(UserSpec::Specific).map_err(|_| {
                Error::InvalidArgument(format!(
                    "users must be all, average, or a user id; got `{id}`"
                ))
            }),
        }
    }
}

impl fmt::Display for UserSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserSpec::All => f.write_str("all"),
            UserSpec::Average => f.write_str("average"),
            UserSpec::Specific(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub task: Task,
    pub users: UserSpec,
    pub folds: usize,
    pub adaboost_rounds: usize,
    pub gbt: GbtParams,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_path: PathBuf::new(),
            task: Task::Floor,
            users: UserSpec::All,
            folds: 10,
            adaboost_rounds: 10,
            gbt: GbtParams::default(),
            seed: 42,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Set one option by its config-file key. Keys under `activity.` belong
    /// to the activity analysis and are ignored here.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data_path = PathBuf::from(value),
            "task" => self.task = value.parse()?,
            "users" => self.users = value.parse()?,
            "folds" => self.folds = parse_value(key, value)?,
            "rounds" => self.adaboost_rounds = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out" => self.output_dir = PathBuf::from(value),
            "gbt.n_trees" => self.gbt.n_trees = parse_value(key, value)?,
            "gbt.max_depth" => self.gbt.max_depth = parse_value(key, value)?,
            "gbt.min_rows_per_leaf" => self.gbt.min_rows_per_leaf = parse_value(key, value)?,
            "gbt.min_split_improvement" => {
                self.gbt.min_split_improvement = parse_value(key, value)?
            }
            "gbt.n_bins" => self.gbt.n_bins = parse_value(key, value)?,
            "gbt.learning_rate" => self.gbt.learning_rate = parse_value(key, value)?,
            "gbt.sample_rate" => self.gbt.sample_rate = parse_value(key, value)?,
            k if k.starts_with("activity.") => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key `{other}`"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!(
                "folds = {}; need at least 2",
                self.folds
            )));
        }
        if self.adaboost_rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be positive".into()));
        }
        self.gbt.validate()?;
        if !self.data_path.is_file() {
            return Err(Error::io(
                &self.data_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "data file not found"),
            ));
        }
        Ok(())
    }

    pub fn adaboost_params(&self) -> AdaBoostParams {
        AdaBoostParams {
            n_rounds: self.adaboost_rounds,
            base_params: self.gbt,
            seed: self.seed,
        }
    }
}

/// Parse flat `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "config line {}: expected key=value, got `{line}`",
                n + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub data_path: String,
    pub task: Task,
    pub users: String,
    pub folds: usize,
    pub adaboost_rounds: usize,
    pub gbt: GbtParams,
    pub seed: u64,
    pub output_dir: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub user: String,
    pub rows: usize,
    pub folds: usize,
    pub overall_accuracy: f64,
    pub report_csv: String,
    pub report_markdown: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ConfigEcho,
    pub dataset_rows: usize,
    pub dataset_users: usize,
    pub runs: Vec<RunRecord>,
    /// Every other file written, relative to the output directory.
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub user_id: i64,
    pub user_accuracy: f64,
    pub average_accuracy: f64,
    pub exceeds: bool,
}

/// Compare each specific user's accuracy with the single average-user entry.
pub fn compare_accuracies(entries: &[(UserSelector, f64)]) -> Result<Vec<ComparisonRow>> {
    let averages: Vec<f64> = entries
        .iter()
        .filter(|(u, _)| *u == UserSelector::Average)
        .map(|(_, a)| *a)
        .collect();
    let average_accuracy = match averages.as_slice() {
        [a] => *a,
        [] => {
            return Err(Error::InvalidArgument(
                "no average-user report to compare against".into(),
            ))
        }
        _ => {
            return Err(Error::InvalidArgument(
                "more than one average-user report".into(),
            ))
        }
    };
    let mut rows: Vec<ComparisonRow> = entries
        .iter()
        .filter_map(|(u, acc)| match u {
            UserSelector::Specific(id) => Some(ComparisonRow {
                user_id: *id,
                user_accuracy: *acc,
                average_accuracy,
                exceeds: *acc > average_accuracy,
            }),
            UserSelector::Average => None,
        })
        .collect();
    rows.sort_by_key(|r| r.user_id);
    Ok(rows)
}

pub fn emit_comparison(reports: &[EvaluationReport]) -> Result<Vec<ComparisonRow>> {
    let entries: Vec<(UserSelector, f64)> = reports
        .iter()
        .map(|r| (r.user, r.overall_accuracy))
        .collect();
    compare_accuracies(&entries)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("user_id,user_accuracy,average_accuracy,exceeds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:?},{:?},{}\n",
            r.user_id, r.user_accuracy, r.average_accuracy, r.exceeds
        ));
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One count file per grouping attribute: `counts_<attr>.csv`.
pub fn emit_figure_counts(ds: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for attr in GroupAttr::ALL {
        let path = out.join(format!("counts_{}.csv", attr.name()));
        let mut buf = Vec::new();
        data::write_grouped_counts(&mut buf, attr, &data::grouped_counts(ds, attr))
            .map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn user_slug(user: UserSelector) -> String {
    match user {
        UserSelector::Average => "average".into(),
        UserSelector::Specific(id) => format!("user{id:02}"),
    }
}

fn user_stream(user: UserSelector) -> u64 {
    match user {
        UserSelector::Average => tag("average"),
        UserSelector::Specific(id) => id as u64,
    }
}

struct RunOutcome {
    report: EvaluationReport,
    record: RunRecord,
    warning: Option<String>,
}

fn run_one(ds: &Dataset, cfg: &ExperimentConfig, user: UserSelector) -> Result<RunOutcome> {
    let started = Instant::now();
    let subset;
    let selected = match user {
        UserSelector::Average => ds,
        UserSelector::Specific(_) => {
            subset = ds.subset(&ds.user_rows(user)?);
            &subset
        }
    };
    let view = selected.task_view(cfg.task);
    let rows = view.labels.len();
    let mut warning = None;
    let mut k = cfg.folds;
    if rows < k {
        if rows < 2 {
            return Err(Error::InvalidArgument(format!(
                "user {user} has {rows} rows; cross-validation needs at least 2"
            )));
        }
        let msg = format!(
            "user {user}, task {}: only {rows} rows, folds reduced from {k} to {rows}",
            cfg.task
        );
        log::warn!("{msg}");
        warning = Some(msg);
        k = rows;
    }

    let stream = [tag(cfg.task.name()), user_stream(user)];
    let fold_seed = derive_seed(cfg.seed, &[stream[0], stream[1], tag("folds")]);
    let plan = make_folds(&view.labels, k, fold_seed)?;
    let params = AdaBoostParams {
        seed: derive_seed(cfg.seed, &stream),
        ..cfg.adaboost_params()
    };
    let report = cross_validate(&view, &plan, &params, user)
        .map_err(|e| e.context(format!("user {user}, task {}", cfg.task)))?;

    let slug = user_slug(user);
    let csv_name = format!("report_{}_{slug}.csv", cfg.task);
    let md_name = format!("report_{}_{slug}.md", cfg.task);
    write_file(&cfg.output_dir.join(&csv_name), &report.to_csv())?;
    write_file(&cfg.output_dir.join(&md_name), &report.to_markdown())?;
    log::info!(
        "user {user}, task {}: accuracy {:.4} over {rows} rows",
        cfg.task,
        report.overall_accuracy
    );
    Ok(RunOutcome {
        record: RunRecord {
            user: user.to_string(),
            rows,
            folds: k,
            overall_accuracy: report.overall_accuracy,
            report_csv: csv_name,
            report_markdown: md_name,
            seconds: started.elapsed().as_secs_f64(),
        },
        report,
        warning,
    })
}

fn summary_markdown(
    task: Task,
    reports: &[EvaluationReport],
    comparison: &[ComparisonRow],
) -> String {
    let pct = |v: f64| format!("{:.2}%", 100.0 * v);
    let mut out = format!("# Summary: {task} task\n\n");
    if let Some(first) = reports.first() {
        out.push_str("| User | Overall accuracy |");
        for m in &first.per_class {
            out.push_str(&format!(" CP {0} | CR {0} |", m.class));
        }
        out.push('\n');
        out.push_str(&"|---".repeat(2 + 2 * first.per_class.len()));
        out.push_str("|\n");
        for r in reports {
            out.push_str(&format!("| {} | {} |", r.user, pct(r.overall_accuracy)));
            for m in &r.per_class {
                out.push_str(&format!(" {} | {} |", pct(m.precision), pct(m.recall)));
            }
            out.push('\n');
        }
    }
    if !comparison.is_empty() {
        let beats = comparison.iter().filter(|c| c.exceeds).count();
        out.push_str(&format!(
            "\n{beats} of {} per-user models exceed the average-user accuracy.\n",
            comparison.len()
        ));
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = Instant::now();
    cfg.validate()?;
    let ds = data::load(&cfg.data_path, &IngestConfig::default())
        .map_err(|e| e.context(cfg.data_path.display().to_string()))?;

    let users: Vec<UserSelector> = match cfg.users {
        UserSpec::Average => vec![UserSelector::Average],
        UserSpec::Specific(id) => {
            ds.user_rows(UserSelector::Specific(id))?;
            vec![UserSelector::Specific(id)]
        }
        UserSpec::All => ds
            .user_ids()
            .into_iter()
            .map(UserSelector::Specific)
            .chain(std::iter::once(UserSelector::Average))
            .collect(),
    };

    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut files: Vec<String> = emit_figure_counts(&ds, &cfg.output_dir)?
        .iter()
        .map(|p| {
            p.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        })
        .collect();

    let outcomes = users
        .par_iter()
        .map(|&user| run_one(&ds, cfg, user))
        .collect::<Result<Vec<_>>>()?;

    let mut ordered: BTreeMap<(bool, i64), &RunOutcome> = BTreeMap::new();
    for o in &outcomes {
        let key = match o.report.user {
            UserSelector::Average => (false, 0),
            UserSelector::Specific(id) => (true, id),
        };
        ordered.insert(key, o);
    }
    let reports: Vec<EvaluationReport> = ordered.values().map(|o| o.report.clone()).collect();

    let comparison = if cfg.users == UserSpec::All {
        let rows = emit_comparison(&reports)?;
        let name = format!("comparison_{}.csv", cfg.task);
        write_file(&cfg.output_dir.join(&name), &comparison_csv(&rows))?;
        files.push(name);
        rows
    } else {
        Vec::new()
    };
    let summary = format!("summary_{}.md", cfg.task);
    write_file(
        &cfg.output_dir.join(&summary),
        &summary_markdown(cfg.task, &reports, &comparison),
    )?;
    files.push(summary);

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config: ConfigEcho {
            data_path: cfg.data_path.display().to_string(),
            task: cfg.task,
            users: cfg.users.to_string(),
            folds: cfg.folds,
            adaboost_rounds: cfg.adaboost_rounds,
            gbt: cfg.gbt,
            seed: cfg.seed,
            output_dir: cfg.output_dir.display().to_string(),
        },
        dataset_rows: ds.len(),
        dataset_users: ds.user_ids().len(),
        runs: ordered.values().map(|o| o.record.clone()).collect(),
        files,
        warnings: ordered.values().filter_map(|o| o.warning.clone()).collect(),
        total_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = cfg.output_dir.join(format!("manifest_{}.json", cfg.task));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path, &json)?;
    Ok(manifest)
}
