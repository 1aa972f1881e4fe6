//! `huber-pl`: tables, phase diagrams, variance maps and simulations for
//! Huber regression with n/p -> m.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::Format;

#[derive(Parser)]
#[command(name = "huber-pl", version, about = "Huber M-estimation in the proportional regime n/p -> m")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Clone, Debug)]
pub struct OutputArgs {
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
}

#[derive(Subcommand)]
pub enum Command {
    /// Classical minimax quantities (kappa*, i*, v*) of the location problem.
    Classical(ClassicalArgs),
    /// Minimax tuning and variance at one (m, eps).
    Minimax(MinimaxArgs),
    /// Breakdown contamination level eps*(m).
    Breakdown(BreakdownArgs),
    /// Phase diagram of a minimax quantity over (eps, 1/m).
    Phase(PhaseArgs),
    /// Variance maps T(tau^2) of proper evolutions and the LFSE line.
    Semaps(SemapsArgs),
    /// Curves kappa -> lambda_bar(kappa) with a monotonicity verdict.
    LambdaMono(LambdaMonoArgs),
    /// Minimax variance V*_m(eps) on the standard contamination levels.
    Table1(Table1Args),
    /// Monte Carlo standard errors at n = 500, p = 250, lambda = lambda*.
    Table2(Table2Args),
    /// Fits one simulated (or supplied) dataset.
    AmpRun(AmpRunArgs),
    /// Monte Carlo per-coordinate MSE of the Huber estimator.
    MonteCarlo(MonteCarloArgs),
}

#[derive(Args, Serialize)]
pub struct ClassicalArgs {
    /// Contamination levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.01, 0.05, 0.1, 0.1924, 0.25, 0.5])]
    pub eps: Vec<f64>,
    /// Uniform grid `lo:hi:n`; replaces --eps.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Args, Serialize)]
pub struct MinimaxArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub eps: f64,
}

#[derive(Args, Serialize)]
pub struct BreakdownArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2.0])]
    pub m: Vec<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    VStar,
    KappaStar,
    LambdaStar,
}

#[derive(Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long, value_enum, default_value_t = Quantity::VStar)]
    pub quantity: Quantity,
    /// Cells `N_EPSxN_INV_M` over (0, 0.5) x (0, 1), at cell midpoints.
    #[arg(long, default_value = "200x200")]
    pub grid: String,
}

#[derive(Args, Serialize)]
pub struct SemapsArgs {
    #[arg(long, default_value_t = 5.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 5.0, 7.5, 10.0])]
    pub mu: Vec<f64>,
    /// Floating threshold; defaults to the minimax one (1 past breakdown).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Args, Serialize)]
pub struct LambdaMonoArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 5.0, 10.0, 20.0])]
    pub m: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.05, 0.10])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Args, Serialize)]
pub struct Table1Args {
    #[arg(long, default_value_t = 2.0)]
    pub m: f64,
}

#[derive(Args, Serialize)]
pub struct Table2Args {
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 20240607)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    InteriorPoint,
    Irls,
    Amp,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementArg {
    Bernoulli,
    ExactCount,
}

#[derive(Args, Serialize)]
pub struct AmpRunArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 250)]
    pub p: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Symmetric two-point contamination at +-mu.
    #[arg(long, default_value_t = 5.0)]
    pub mu: f64,
    /// Threshold; defaults to lambda*(eps, n/p).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Amp)]
    pub solver: SolverArg,
    /// Read `y, x_1..x_p` from this CSV instead of simulating.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Also write the dataset used as CSV.
    #[arg(long)]
    pub write_data: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct MonteCarloArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 250)]
    pub p: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 5.0)]
    pub mu: f64,
    /// Threshold; defaults to lambda*(eps, n/p).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 20240607)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SolverArg::InteriorPoint)]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value_t = PlacementArg::Bernoulli)]
    pub placement: PlacementArg,
    /// Stopping tolerance for the IRLS and AMP solvers.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numerical(String),
}

impl From<huber_pl::error::Error> for CliError {
    fn from(e: huber_pl::error::Error) -> Self {
        use huber_pl::error::Error;
        match e {
            Error::InvalidParameter(_) | Error::Format(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("huber-pl: invalid argument: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("huber-pl: numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
