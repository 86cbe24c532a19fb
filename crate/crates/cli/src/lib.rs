//! Command-line front end: density and regression estimation from CSV
//! input, and the simulation study.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "sphdecon",
    version,
    about = "Deconvolution estimation on the sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deconvolution density estimate on a grid.
    Density(EstimateArgs),
    /// Deconvolution regression estimate on a grid.
    Regress(EstimateArgs),
    /// Monte Carlo study of the regression estimators.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimateArgs {
    /// Input CSV with columns lon,lat (and y for regression), in degrees.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Error model: error-free, laplace, gaussian, rosenthal or vmf.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Fixed truncation level.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Truncation grid for cross-validation, `a..b` or a comma list.
    #[arg(long = "T-grid")]
    pub t_grid: Option<String>,
    /// Interval method: an, el or none.
    #[arg(long)]
    pub ci: Option<String>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Product-quadrature resolution of the output grid.
    #[arg(long = "grid-res")]
    pub grid_res: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Named preset; `s1-desk` runs all scenarios at n = 250, 500 with R = 50.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma list of scenarios among S1, S2, S3.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma list of sample sizes.
    #[arg(long)]
    pub n: Option<String>,
    /// Replicates per configuration.
    #[arg(long = "R")]
    pub r: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long = "T-grid")]
    pub t_grid: Option<String>,
    /// Comma list of nominal levels.
    #[arg(long)]
    pub level: Option<String>,
    /// Quadrature resolution for the integrated criteria.
    #[arg(long = "grid-res")]
    pub grid_res: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for table1.csv, table2.csv and summary.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Density(a) => commands::cmd_density(a),
        Command::Regress(a) => commands::cmd_regress(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
