//! The `hopfield-md` command line.
//!
//! Exit codes: 0 on success (a diverged run is still a success), 1 on runtime
//! failures such as I/O or a curvature that cannot be factored, 2 on usage
//! errors including invalid configuration files.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{InitKind, RunConfigFile, DEFAULT_GRID, DEFAULT_INIT_SIGMA, DEFAULT_MARGIN};
use crate::experiment::{make_truth, pca_of_paths, run_method, AccuracyReport, MethodSpec, TruthSpec};
use crate::io::{
    atomic_write, pca_grid_csv, pca_paths_csv, read_trajectory_csv, trajectory_csv, with_suffix, write_json,
    BaselineSummary, CompareSummary, PcaSidecar, RunSummary, TruthFile,
};
use crate::loss::{kl_loss, TargetDistribution};
use crate::optim::{InitStrategy, Method, OptimizerConfig, DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "hopfield-md",
    version,
    about = "Exact maximum-likelihood training of the Hopfield model with GD, NGD and mirror descent"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample ground-truth parameters and write them as JSON.
    GenTruth(GenTruthArgs),
    /// Train one optimizer against a truth file.
    Train(TrainArgs),
    /// Run every method of a config file against a shared truth.
    Compare(CompareArgs),
    /// Project trajectories on their principal plane and grid the loss.
    Pca(PcaArgs),
}

#[derive(Debug, clap::Args)]
struct GenTruthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_init(s: &str) -> Result<InitKind, String> {
    match s {
        "random" => Ok(InitKind::Random),
        "hopfield" => Ok(InitKind::Hopfield),
        other => Err(format!("unknown init `{other}`, expected random or hopfield")),
    }
}

#[derive(Debug, clap::Args)]
struct TrainArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, value_parser = parse_init)]
    init: InitKind,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    iters: usize,
    /// Seed of the random initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_INIT_SIGMA)]
    init_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    grad_tol: f64,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, clap::Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
struct PcaArgs {
    /// Trajectory CSVs written by `train` or `compare`.
    #[arg(long, num_args = 1.., required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidSpinCount { .. } | Error::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenTruth(args) => gen_truth(args),
        Command::Train(args) => train(args),
        Command::Compare(args) => compare(args),
        Command::Pca(args) => pca(args),
    }
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

fn load_truth(path: &Path) -> Result<(TruthFile, crate::ParamVector, TargetDistribution), Error> {
    let file = TruthFile::read(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })?;
    let theta = file.params()?;
    let target = TargetDistribution::from_params(&theta);
    Ok((file, theta, target))
}

fn gen_truth(args: GenTruthArgs) -> CliResult {
    let spec = TruthSpec {
        n: args.n,
        sigma: args.sigma,
        seed: args.seed,
    };
    let (theta, _) = make_truth(&spec)?;
    ensure_parent(&args.out)?;
    TruthFile::new(&spec, &theta).write(&args.out)?;
    Ok(())
}

fn train(args: TrainArgs) -> CliResult {
    let (_, theta_true, target) = load_truth(&args.truth)?;
    let config = OptimizerConfig {
        method: args.method,
        alpha: args.alpha,
        epsilon: args.eps,
        max_iters: args.iters,
        grad_tol: args.grad_tol,
    };
    config.validate()?;
    let init = match args.init {
        InitKind::Hopfield => InitStrategy::Hopfield,
        InitKind::Random => InitStrategy::Random {
            seed: args.seed,
            sigma: args.init_sigma,
        },
    };
    let label = args
        .out_prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.method.to_string());
    let result = run_method(
        &target,
        &theta_true,
        &MethodSpec {
            label,
            config,
            init,
        },
    )?;
    for w in &result.trajectory.warnings {
        eprintln!("warning: {w}");
    }
    ensure_parent(&args.out_prefix)?;
    atomic_write(&with_suffix(&args.out_prefix, ".csv"), &trajectory_csv(&result.trajectory)?)?;
    write_json(&with_suffix(&args.out_prefix, ".summary.json"), &RunSummary::from_result(&result))?;
    Ok(())
}

fn compare(args: CompareArgs) -> CliResult {
    let config = RunConfigFile::load(&args.config)?;
    let (theta_true, target) = make_truth(&config.truth)?;
    let specs = config.method_specs();
    let results: Vec<_> = specs
        .par_iter()
        .map(|spec| run_method(&target, &theta_true, spec))
        .collect();

    fs::create_dir_all(&args.out_dir).map_err(Error::from)?;
    TruthFile::new(&config.truth, &theta_true).write(&args.out_dir.join("truth.json"))?;
    let hopfield = target.target_moments().to_params();
    let hopfield_accuracy = AccuracyReport::new(&theta_true, &hopfield);
    let mut summary = CompareSummary {
        truth: config.truth,
        hopfield_solution: BaselineSummary {
            label: "hopfield-solution".into(),
            loss: kl_loss(&target, &hopfield).unwrap_or(f64::INFINITY),
            rmse: hopfield_accuracy.rmse,
            pearson_r: hopfield_accuracy.pearson_r,
        },
        runs: Vec::new(),
    };
    let mut failure = None;
    for (spec, result) in specs.iter().zip(results) {
        let written = result.map_err(CliError::from).and_then(|r| {
            let csv = trajectory_csv(&r.trajectory)?;
            atomic_write(&args.out_dir.join(format!("{}.csv", r.label)), &csv)?;
            Ok(r)
        });
        match written {
            Ok(r) => {
                eprintln!(
                    "{}: {} after {} iterations, loss {:.6e}, rmse {:.4}",
                    r.label,
                    r.trajectory.status,
                    r.trajectory.last().iter,
                    r.trajectory.last().loss,
                    r.accuracy.rmse
                );
                summary.runs.push(RunSummary::from_result(&r));
            }
            Err(e) => {
                let message = match &e {
                    CliError::Usage(m) | CliError::Runtime(m) => format!("{}: {m}", spec.label),
                };
                failure = Some(match e {
                    CliError::Usage(_) => CliError::Usage(message),
                    CliError::Runtime(_) => CliError::Runtime(message),
                });
                break;
            }
        }
    }
    write_json(&args.out_dir.join("summary.json"), &summary)?;
    failure.map_or(Ok(()), Err)
}

fn pca(args: PcaArgs) -> CliResult {
    let (_, _, target) = load_truth(&args.truth)?;
    let mut labels = Vec::new();
    let mut paths = Vec::new();
    let mut iters = Vec::new();
    for run in &args.runs {
        let table = read_trajectory_csv(run)?;
        let (its, thetas): (Vec<usize>, Vec<Vec<f64>>) = table
            .iters
            .into_iter()
            .zip(table.thetas)
            .filter(|(_, t)| t.iter().all(|v| v.is_finite()))
            .unzip();
        labels.push(
            run.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
        paths.push(thetas);
        iters.push(its);
    }
    let pca = pca_of_paths(&paths, &target, args.grid, args.margin)?;
    ensure_parent(&args.out_prefix)?;
    atomic_write(&with_suffix(&args.out_prefix, ".paths.csv"), &pca_paths_csv(&labels, &pca, &iters)?)?;
    atomic_write(&with_suffix(&args.out_prefix, ".grid.csv"), &pca_grid_csv(&pca)?)?;
    let [axis1, axis2] = pca.axes.clone();
    write_json(
        &with_suffix(&args.out_prefix, ".axes.json"),
        &PcaSidecar {
            runs: labels,
            mean: pca.mean.clone(),
            axis1,
            axis2,
            explained_variance: pca.explained_variance,
            grid_size: pca.grid_size,
        },
    )?;
    Ok(())
}
