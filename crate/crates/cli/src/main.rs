//! `sspif`: TV sweeps, convergence studies and tableau checks for
//! integrating-factor SSP Runge–Kutta methods.
//!
//! Exit status: 0 when every requested check passes, 1 when a check fails,
//! 2 on configuration, input or numerical errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Context};
use config::Config;

#[derive(Parser, Debug)]
#[command(name = "sspif", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Named configuration: motivating, sweep1000, test1 or test2.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for random initial data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Extra tableau file; may be repeated.
    #[arg(long = "tableau-file", global = true)]
    tableau_file: Vec<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Maximal TV rise against λ = Δt/Δx and observed thresholds.
    TvSweep,
    /// Spatial and temporal co-refinement against a fine reference.
    Corefine,
    /// Temporal convergence on a fixed grid.
    OdeConverge,
    /// Order conditions, SSP coefficients and decreasing abscissas.
    VerifyTableaux,
    /// Fine-grid reference solution.
    Reference,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    let ctx = Context {
        config,
        out: cli.out.clone(),
        preset: cli.preset.clone(),
        seed: cli.seed,
        tableau_files: cli.tableau_file.clone(),
    };
    match cli.command {
        Command::TvSweep => commands::tv_sweep_cmd(&ctx),
        Command::Corefine => commands::corefine_cmd(&ctx),
        Command::OdeConverge => commands::ode_converge_cmd(&ctx),
        Command::VerifyTableaux => commands::verify_tableaux_cmd(&ctx),
        Command::Reference => commands::reference_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
