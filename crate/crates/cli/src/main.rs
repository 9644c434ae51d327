//! `qmcd` command-line tool.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime failure.
//! Progress logs go to stderr; stdout carries a single summary line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Settings come from `--config` when given; explicit flags override the
/// corresponding config fields, and anything left unset takes its default.
#[derive(Debug, Parser)]
#[command(name = "qmcd", version, about = "QMC sampling, discrepancies and discrepancy-based inference")]
#[command(after_help = "Precedence: flags > config file > defaults.")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a QMC, RQMC or pseudo-random point set to CSV.
    Points(PointsArgs),
    /// Push a point set through a generator and write the samples to CSV.
    Simulate(SimulateArgs),
    /// Evaluate a discrepancy between two CSV samples.
    Discrepancy(DiscrepancyArgs),
    /// Run a sample-complexity sweep from a JSON config.
    Sweep(SweepArgs),
    /// Minimum distance estimation from a JSON config.
    Mde(RunArgs),
    /// ABC rejection from a JSON config.
    Abc(AbcArgs),
    /// Re-render the SVG panels from a sweep's records.csv.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct PointsArgs {
    /// sobol, halton, lattice, vdc or mc.
    #[arg(long, default_value = "sobol")]
    pub family: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Randomize the construction with this seed; unscrambled when absent.
    #[arg(long)]
    pub scramble_seed: Option<u64>,
    /// Seed for `--family mc` when no scramble seed is given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Generator config (JSON, e.g. `{"kind": "gandk", "d": 2}`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// uniform, gaussian, gandk, bivariate_beta or smooth_mlp.
    #[arg(long)]
    pub generator: Option<String>,
    /// Output dimension, for generators that take one.
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated parameter vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    /// mc, rqmc-sobol, rqmc-halton or rqmc-lattice.
    #[arg(long, default_value = "rqmc-sobol")]
    pub sampler: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiscrepancyArgs {
    /// Discrepancy config (JSON); the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mmd, wasserstein, sinkhorn or sliced.
    #[arg(long)]
    pub kind: Option<String>,
    /// se, matern32, matern52 or matern72.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub lengthscale: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// plugin, v_statistic or u_statistic.
    #[arg(long)]
    pub estimator: Option<String>,
    /// euclidean, l1 or linf.
    #[arg(long)]
    pub cost: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub slices: Option<usize>,
    /// Seed for sliced directions.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Also write the value and resolved settings as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; `--jobs 1` is the reference single-threaded mode.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AbcArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Replaces the config's thresholds; repeat for several.
    #[arg(long)]
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A records.csv written by `sweep`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    match commands::run(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
