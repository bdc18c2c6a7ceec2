//! Config-driven experiment runner for the strip homogenization workbench.

mod config;
mod output;
mod report;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::Kind;
use output::{write_atomic, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error(transparent)]
    Solver(#[from] strip_homog::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use strip_homog::Error as E;
        match self {
            CliError::Config(_) | CliError::MissingData(_) => 2,
            CliError::Solver(E::InvalidInput(_) | E::HypothesisViolated(_)) => 2,
            _ => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "strip-homog", version, about = "Oblique-boundary homogenization experiments on truncated strips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one cell problem and write the field and its report.
    Solve(RunArgs),
    /// Slope against a decreasing list of eps, with the rate plot.
    Sweep(RunArgs),
    /// Slopes of two nearby directions against the first-homogenized slopes.
    Continuity(RunArgs),
    /// Lipschitz ratios of the slope in the tangential component of q.
    LipschitzQ(RunArgs),
    /// Sampled structural checks of the operators.
    Validate(RunArgs),
    /// Discrepancy, approximate periods and the rate function of a direction.
    Lattice(RunArgs),
    /// Plots and tables from the CSVs of earlier runs.
    Report {
        results_dir: PathBuf,
        /// Directory for the plots; defaults to the results directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    skip_validate: bool,
}

fn execute(kind: Kind, args: &RunArgs) -> Result<Vec<Verdict>, CliError> {
    let mut cfg = config::load(&args.config)?;
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(CliError::Config(format!("config is for \"{}\" but the subcommand is \"{}\"", k.name(), kind.name())));
        }
    }
    if let Some(seed) = args.seed {
        cfg.numerics.seed = seed;
    }
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let out = args.out.clone().or_else(|| cfg.output.dir.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&out)?;
    let skip = args.skip_validate;
    let verdicts = match kind {
        Kind::Solve => run::solve(&cfg, &out, skip),
        Kind::Sweep => run::sweep(&cfg, &out, skip),
        Kind::Continuity => run::continuity(&cfg, &out, skip),
        Kind::LipschitzQ => run::lipschitz(&cfg, &out, skip),
        Kind::Validate => run::validate(&cfg, &out),
        Kind::Lattice => run::lattice(&cfg, &out),
    }?;
    write_verdicts(&out, &verdicts)?;
    Ok(verdicts)
}

fn write_verdicts(out: &Path, verdicts: &[Verdict]) -> Result<(), CliError> {
    let mut text = String::new();
    for v in verdicts {
        text.push_str(&v.line());
        text.push('\n');
    }
    write_atomic(&out.join("verdict.txt"), text.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Solve(a) => (Kind::Solve, a),
        Command::Sweep(a) => (Kind::Sweep, a),
        Command::Continuity(a) => (Kind::Continuity, a),
        Command::LipschitzQ(a) => (Kind::LipschitzQ, a),
        Command::Validate(a) => (Kind::Validate, a),
        Command::Lattice(a) => (Kind::Lattice, a),
        Command::Report { results_dir, out } => {
            return match report::report(results_dir, out.as_deref().unwrap_or(results_dir)) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            };
        }
    };
    match execute(kind, args) {
        Ok(verdicts) => {
            for v in &verdicts {
                println!("{}", v.line());
            }
            if verdicts.iter().all(|v| v.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
