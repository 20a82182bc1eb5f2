use std::path::{Path, PathBuf};
use std::process::ExitCode;

use advreg::analysis::{gre_constant, re_constant, ReOptions};
use advreg::harness::{
    cmd_check_bounds, cmd_experiment, cmd_fit, cmd_generate, cmd_path, log_grid, DeltaChoice, ExperimentConfig,
    FitOutput, Method, ReOutput,
};
use advreg::io;
use advreg::{Error, GroupPartition, SolverOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_CONFIG: u8 = 5;

#[derive(Parser)]
#[command(name = "advreg", version, about = "Adversarially trained linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic datasets (X.csv, Y.csv, truth.json) for every n and replication.
    Generate(ExperimentArgs),
    /// Fit one dataset and write fit.json.
    Fit(FitArgs),
    /// Fit along a δ grid and write path.csv.
    Path(PathArgs),
    /// Run the error-curve experiment: error_curves.csv, runs.csv, slopes.json.
    Experiment(ExperimentArgs),
    /// Check the oracle condition, shrinkage and error bounds for a fit.
    CheckBounds(CheckArgs),
    /// Estimate the restricted (or group restricted) eigenvalue constant.
    ReEstimate(ReArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Classic,
    Group,
}

impl From<VariantArg> for Method {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Classic => Method::Classic,
            VariantArg::Group => Method::Group,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment configuration JSON; the reference setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, default_value = "X.csv")]
    x: PathBuf,
    #[arg(long, default_value = "Y.csv")]
    y: PathBuf,
    /// Group partition JSON (group variant).
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "classic")]
    variant: VariantArg,
    /// Fixed δ; otherwise the closed-form rule times --rule-scale.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1.0, conflicts_with = "delta")]
    rule_scale: f64,
    /// Solver options JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "fit.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "classic")]
    variant: VariantArg,
    /// Smallest multiple of delta_classic(n, p).
    #[arg(long, default_value_t = 0.01)]
    low: f64,
    #[arg(long, default_value_t = 10.0)]
    high: f64,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "path.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "truth.json")]
    truth: PathBuf,
    #[arg(long, default_value = "fit.json")]
    fit: PathBuf,
    /// Eigenvalue-estimate options JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "bound_report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ReArgs {
    #[arg(long, default_value = "X.csv")]
    x: PathBuf,
    /// With a partition the group constant is estimated.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Support size s, or number of support groups g.
    #[arg(long)]
    size: usize,
    /// Cone constant.
    #[arg(long, default_value_t = 3.0)]
    cone: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "re_estimate.json")]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::OracleUnavailable => EXIT_IO,
        Error::NumericalFailure(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_CONFIG,
    }
}

fn solver_options(path: Option<&Path>) -> advreg::Result<SolverOptions> {
    let opts: SolverOptions = match path {
        Some(p) => io::read_json(p).map_err(config_error)?,
        None => SolverOptions::default(),
    };
    opts.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(opts)
}

fn re_options(path: Option<&Path>, seed: Option<u64>) -> advreg::Result<ReOptions> {
    let mut opts: ReOptions = match path {
        Some(p) => io::read_json(p).map_err(config_error)?,
        None => ReOptions::default(),
    };
    if let Some(s) = seed {
        opts.seed = s;
    }
    Ok(opts)
}

/// Malformed JSON in a configuration file is a configuration error.
fn config_error(e: Error) -> Error {
    match e {
        Error::Json(j) => Error::Config(j.to_string()),
        other => other,
    }
}

fn experiment_config(args: &ExperimentArgs) -> advreg::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => io::read_json(p).map_err(config_error)?,
        None => ExperimentConfig::reference("experiment"),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn partition(path: Option<&Path>) -> advreg::Result<Option<GroupPartition>> {
    path.map(io::read_partition).transpose()
}

fn run(cli: Cli) -> advreg::Result<u8> {
    match cli.command {
        Command::Generate(args) => {
            let dirs = cmd_generate(&experiment_config(&args)?)?;
            eprintln!("wrote {} dataset(s)", dirs.len());
            Ok(0)
        }
        Command::Fit(args) => {
            let data = io::load_dataset(&args.data.x, &args.data.y)?;
            let part = partition(args.data.partition.as_deref())?;
            let choice = match args.delta {
                Some(value) => DeltaChoice::Fixed { value },
                None => DeltaChoice::Rule {
                    scale: args.rule_scale,
                },
            };
            let opts = solver_options(args.config.as_deref())?;
            let out = cmd_fit(&data, args.variant.into(), choice, part.as_ref(), &opts, Some(&args.out))?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if out.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Path(args) => {
            let data = io::load_dataset(&args.data.x, &args.data.y)?;
            let part = partition(args.data.partition.as_deref())?;
            let grid = log_grid(1.0, args.low, args.high, args.count)?;
            let opts = solver_options(args.config.as_deref())?;
            let (_, fits) = cmd_path(&data, args.variant.into(), &grid, part.as_ref(), &opts, Some(&args.out))?;
            Ok(if fits.iter().all(|f| f.converged) { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Experiment(args) => {
            let summary = cmd_experiment(&experiment_config(&args)?)?;
            let show = |s: Option<f64>| s.map_or("null".to_string(), |v| format!("{v:.3}"));
            eprintln!(
                "slopes: classic {}, group {}",
                show(summary.slopes.classic.slope),
                show(summary.slopes.group.slope)
            );
            Ok(if summary.runs.iter().all(|r| r.converged) { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::CheckBounds(args) => {
            let data = io::load_dataset(&args.data.x, &args.data.y)?;
            let truth = io::read_truth(&args.truth)?;
            let fit: FitOutput = io::read_json(&args.fit)?;
            let part = partition(args.data.partition.as_deref())?;
            let opts = re_options(args.config.as_deref(), args.seed)?;
            let report = cmd_check_bounds(&data, &truth, &fit, part.as_ref(), &opts)?;
            io::write_json(&args.out, &report)?;
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            Ok(if report.violations.is_empty() { 0 } else { EXIT_VIOLATION })
        }
        Command::ReEstimate(args) => {
            let x = io::read_matrix_csv(&args.x)?;
            let opts = re_options(args.config.as_deref(), args.seed)?;
            let est = match partition(args.partition.as_deref())? {
                Some(part) => gre_constant(&x, &part, args.size, args.cone, &opts)?,
                None => re_constant(&x, args.size, args.cone, &opts)?,
            };
            io::write_json(&args.out, &ReOutput::from(est))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
