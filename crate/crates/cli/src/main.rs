use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use indoorboost::activity::{derive_profile, load_units, ComplexActivityProfile, ProfileParams};
use indoorboost::data::{self, IngestConfig};
use indoorboost::experiment::{
    emit_figure_counts, parse_key_values, run_experiment, ExperimentConfig,
};
use indoorboost::{Error, Result};

/// Number of rayon worker threads; unset means one per core.
const WORKERS_ENV: &str = "INDOORBOOST_WORKERS";

#[derive(Parser, Debug)]
#[command(
    name = "indoorboost",
    version,
    about = "Floor and region classification from WiFi fingerprints"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// UJIIndoorLoc-format CSV file
    #[arg(long)]
    data: Option<PathBuf>,
    /// floor or region
    #[arg(long)]
    task: Option<String>,
    /// all, average, or a user id
    #[arg(long)]
    users: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive start/end/core sets and variant counts for a complex activity
    Activity {
        /// CSV with columns kind,label,weight,sequence_index
        profile: PathBuf,
        #[arg(long)]
        core_threshold: Option<f64>,
        #[arg(long)]
        boundary_width: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write per-user count tables grouped by building, floor, space and relative position
    Counts {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_config(path: &PathBuf) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_key_values(&text)
}

fn experiment_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        for (key, value) in read_config(path)? {
            cfg.set(&key, &value)?;
        }
    }
    let path_flag = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let flags = [
        ("data", path_flag(&args.data)),
        ("task", args.task.clone()),
        ("users", args.users.clone()),
        ("folds", args.folds.clone()),
        ("rounds", args.rounds.clone()),
        ("seed", args.seed.clone()),
        ("out", path_flag(&args.out)),
    ];
    for (key, value) in flags {
        if let Some(value) = value {
            cfg.set(key, &value)?;
        }
    }
    if cfg.data_path.as_os_str().is_empty() {
        return Err(Error::InvalidArgument(
            "--data is required (flag or config key `data`)".into(),
        ));
    }
    Ok(cfg)
}

fn print_profile(p: &ComplexActivityProfile) {
    let labels = |units: &[indoorboost::activity::AtomicUnit], idx: &[usize]| {
        idx.iter()
            .map(|&i| units[i].label.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let a = &p.atomic_activities;
    let c = &p.context_attributes;
    println!("eta\t{}", p.eta());
    println!("mu\t{}", p.mu());
    println!("q\t{}", p.q());
    println!("omega\t{}", p.omega());
    println!("start_atomic\t{}", labels(a, &p.start_atomic));
    println!("end_atomic\t{}", labels(a, &p.end_atomic));
    println!("core_atomic\t{}", labels(a, &p.core_atomic));
    println!("start_context\t{}", labels(c, &p.start_context));
    println!("end_context\t{}", labels(c, &p.end_context));
    println!("core_context\t{}", labels(c, &p.core_context));
    println!("zeta\t{}", p.zeta);
    println!("theta\t{}", p.theta);
    println!("psi\t{}", p.psi);
}

fn activity(
    profile: &Path,
    core_threshold: Option<f64>,
    boundary_width: Option<usize>,
    config: Option<&PathBuf>,
) -> Result<()> {
    let mut params = ProfileParams::default();
    if let Some(path) = config {
        for (key, value) in read_config(path)? {
            let bad = || Error::InvalidArgument(format!("bad value `{value}` for `{key}`"));
            match key.as_str() {
                "activity.core_threshold" => {
                    params.core_threshold = value.parse().map_err(|_| bad())?
                }
                "activity.boundary_width" => {
                    params.boundary_width = value.parse().map_err(|_| bad())?
                }
                _ => {}
            }
        }
    }
    if let Some(t) = core_threshold {
        params.core_threshold = t;
    }
    if let Some(w) = boundary_width {
        params.boundary_width = w;
    }
    let (atomic, context) = load_units(profile)?;
    print_profile(&derive_profile(&atomic, &context, &params)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Some(Command::Activity {
            profile,
            core_threshold,
            boundary_width,
            config,
        }) => activity(&profile, core_threshold, boundary_width, config.as_ref()),
        Some(Command::Counts { data, out }) => {
            let ds = data::load(&data, &IngestConfig::default())?;
            for path in emit_figure_counts(&ds, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        None => {
            let cfg = experiment_config(&cli.run)?;
            let manifest = run_experiment(&cfg)?;
            for r in &manifest.runs {
                println!("{}\t{}\t{:.4}", cfg.task, r.user, r.overall_accuracy);
            }
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
    }
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!("{WORKERS_ENV}={raw} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_workers().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
