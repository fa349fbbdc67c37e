mod commands;
mod config;
mod error;
mod grid;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;
use crate::grid::Grid;
use crate::output::Format;

/// Mass at zero, smiles and prices for the uncorrelated SABR model.
#[derive(Debug, Parser)]
#[command(name = "sabr-atom", version, args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<std::path::PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability that the forward has been absorbed at zero.
    Mass(MassArgs),
    /// Implied volatility smile, slope-bound ratios and implied density.
    Smile(SmileArgs),
    /// Density of the integrated variance.
    Density(DensityArgs),
    /// Call prices.
    Price(PriceArgs),
    /// Monte Carlo simulation of the absorbed forward.
    Mc(McArgs),
}

/// Model parameters. Comma lists and `start:stop:step` ranges are accepted
/// where a sweep makes sense.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "0.2", allow_hyphen_values = true)]
    pub x0: Grid,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub y0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub nu: f64,
    #[arg(long, default_value = "0.2", allow_hyphen_values = true)]
    pub beta: Grid,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 2000)]
    pub paths: usize,
    /// Time steps per unit of time.
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub antithetic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Euler,
    LogEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MassMethodArg {
    Finite,
    Smalltime,
    Largetime,
    LargetimeSeries,
    Truncated,
    Beta0,
    Mc,
}

#[derive(Debug, Args)]
pub struct MassArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = MassMethodArg::Largetime)]
    pub method: MassMethodArg,
    /// Horizons, for the finite-time, small-time and Monte Carlo methods.
    #[arg(long, short_alias = 'T', alias = "T")]
    pub t: Option<Grid>,
    /// Highest series order; one row per order from 0.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Truncation points of the large-time integral.
    #[arg(long)]
    pub r_max: Option<Grid>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmileModel {
    Obloj,
    Antonov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WingMassArg {
    Largetime,
    Finite,
}

#[derive(Debug, Args)]
pub struct SmileArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short_alias = 'T', alias = "T", default_value_t = 10.0)]
    pub t: f64,
    /// Log-strikes relative to the forward.
    #[arg(long, default_value = "-10:3:0.025", allow_hyphen_values = true)]
    pub k: Grid,
    #[arg(long, value_enum, default_value_t = SmileModel::Obloj)]
    pub method: SmileModel,
    /// Mass fed to the wing expansion; overrides --wing-mass.
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long, value_enum, default_value_t = WingMassArg::Largetime)]
    pub wing_mass: WingMassArg,
    /// Replace the left wing where it admits arbitrage.
    #[arg(long)]
    pub regularize: bool,
    /// Smallest blend window of the splice, in log-strike.
    #[arg(long, default_value_t = 0.25)]
    pub blend_width: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityMethod {
    Finite,
    Infinite,
    Smalltime,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = DensityMethod::Finite)]
    pub method: DensityMethod,
    #[arg(long, short_alias = 'T', alias = "T", default_value = "1")]
    pub t: Grid,
    /// Values of the integrated variance; a log grid around the mean by default.
    #[arg(long)]
    pub r: Option<Grid>,
    /// Report the integral of the density instead of its values.
    #[arg(long)]
    pub grid_integrate: bool,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriceMethod {
    Antonov,
    Mc,
    Obloj,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Absolute strikes.
    #[arg(long = "K", alias = "k", default_value = "0.2")]
    pub strikes: Grid,
    #[arg(long, short_alias = 'T', alias = "T", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = PriceMethod::Antonov)]
    pub method: PriceMethod,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizons, all read off the same paths.
    #[arg(long, short_alias = 'T', alias = "T", default_value = "10,15,20,30,50,100")]
    pub t: Grid,
    /// Price calls at these absolute strikes at the last horizon instead.
    #[arg(long = "K", alias = "k")]
    pub strikes: Option<Grid>,
    /// Repeat at 2x, 4x, ... the step count this many times in total.
    #[arg(long, default_value_t = 1)]
    pub refine: usize,
    #[command(flatten)]
    pub sim: SimArgs,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SABR_ATOM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SABR_ATOM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn run() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().collect();
    let cli = config::parse_with_config(args)?;
    configure_threads()?;
    let report = commands::dispatch(&cli.command)?;
    output::write(&report, cli.format, cli.output.as_deref())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
