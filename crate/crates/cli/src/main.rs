mod commands;
mod manifest;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetcache::model::Mode;
use hetcache::report::Method;

use crate::spec::{DensityRange, GridArg, SweepArg};

/// Area spectral efficiency of backhaul-limited vs cache-enabled two-tier networks.
#[derive(Debug, Parser)]
#[command(name = "hetcache", version, about)]
struct Cli {
    /// Worker threads for sweeps and Monte Carlo drops.
    #[arg(long, global = true, env = "HETCACHE_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the ASE, optionally over a parameter sweep.
    Ase(AseArgs),
    /// Cache size needed to reach a target ASE at each helper density.
    Tradeoff(TradeoffArgs),
    /// Helper density maximizing the ASE under a fixed cache budget per area.
    OptimalDensity(OptimalArgs),
    /// Compare integral, closed-form and Monte Carlo ASE against tolerances.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Monte Carlo drops.
    #[arg(long, default_value_t = 500)]
    pub drops: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Expected macro BSs in the simulation window.
    #[arg(long, default_value_t = 100.0)]
    pub expected_macros: f64,
}

#[derive(Debug, Args)]
pub struct AseArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the mode in the config file.
    #[arg(long, value_parser = spec::parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long, default_value = "integral", value_parser = spec::parse_method)]
    pub method: Method,
    /// var=lo:hi:n[:log] with var one of lambda2 (per macro cell),
    /// eta, backhaul (Mbps), skew.
    #[arg(long)]
    pub sweep: Option<SweepArg>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["target_ase", "target_per_cell"])))]
pub struct TradeoffArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Target ASE in bps/Hz/m².
    #[arg(long)]
    pub target_ase: Option<f64>,
    /// Target ASE in bps/Hz per macro-cell area (500²π m²).
    #[arg(long)]
    pub target_per_cell: Option<f64>,
    /// Helper densities per macro cell, lo:hi:n[:log].
    #[arg(long)]
    pub density_grid: GridArg,
    #[arg(long, default_value = "closed_form", value_parser = spec::parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("cache_budget").required(true).args(["budget", "budget_per_m2"])))]
pub struct OptimalArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Cached files per macro-cell area (λ_2 N_c in units of 1/(500²π)).
    #[arg(long)]
    pub budget: Option<f64>,
    /// Cached files per m².
    #[arg(long)]
    pub budget_per_m2: Option<f64>,
    /// Comma-separated Zipf exponents.
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.8,1.0")]
    pub delta_list: Vec<f64>,
    /// Helper density range per macro cell, lo:hi.
    #[arg(long, default_value = "1:10000")]
    pub range: DensityRange,
    /// Log-spaced scan points.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long, default_value = "closed_form", value_parser = spec::parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Directory for summary.csv and one curve CSV per exponent.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = spec::parse_mode)]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also write the comparison as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match &cli.command {
        Command::Ase(a) => commands::ase(a, &argv),
        Command::Tradeoff(a) => commands::tradeoff(a, &argv),
        Command::OptimalDensity(a) => commands::optimal_density(a, &argv),
        Command::Validate(a) => commands::validate(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
