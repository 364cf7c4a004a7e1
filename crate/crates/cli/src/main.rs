//! `condensate` — stochastic simulations of relative-phase buildup between
//! two Bose-Einstein condensates under sequential atom detection.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 validation
//! failure.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use config::Settings;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "condensate",
    version,
    about = "Interference and phase buildup between condensates in mixed number states"
)]
struct Cli {
    /// Configuration file with one `key = value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a configuration key (repeatable), e.g. --set runs=200.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads for ensemble parallelism (default: all cores).
    /// Outputs do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form one-detection visibility curves over a ratio grid.
    VisibilityCurve {
        /// Output CSV path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        ratio_min: f64,
        #[arg(long, default_value_t = 100.0)]
        ratio_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Atom number of the reference Fock pair.
        #[arg(long, default_value_t = 20)]
        fock_atoms: u64,
    },
    /// One stochastic detection run: fringe histogram plus fit.
    Run {
        /// Output prefix; writes PREFIX.csv and PREFIX.json.
        #[arg(long, value_name = "PREFIX")]
        out: PathBuf,
    },
    /// Ensemble of runs: per-step mean visibility and quartile bands.
    Ensemble {
        #[arg(long, value_name = "PREFIX")]
        out: PathBuf,
    },
    /// Contrast-loss variance per detection count against the 1/m law.
    Variance {
        #[arg(long, value_name = "PREFIX")]
        out: PathBuf,
        /// First detection count used in the fit (the law needs m >> 1).
        #[arg(long, default_value_t = 50)]
        fit_from: usize,
    },
    /// Inverse-spread slopes of number-state trajectories.
    Slope {
        #[arg(long, value_name = "PREFIX")]
        out: PathBuf,
        /// Atom number of both condensates.
        #[arg(long, default_value_t = 10_000)]
        atoms: u64,
        /// Net counting-rate ratios to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.25])]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        fit_from: usize,
    },
    /// Cross-engine validation suite and output-file schema checks.
    Validate {
        /// Optional JSON report path.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Emitted files whose schema version should be verified.
        #[arg(long = "check", value_name = "FILE")]
        check: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.threads {
        Some(threads) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(1);
                }
            };
            pool.install(|| dispatch(&cli))
        }
        None => dispatch(&cli),
    };

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Runs the selected command; `Ok(false)` means a validation failure.
fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    let settings = Settings::from_sources(cli.config.as_deref(), &cli.set)?;
    let resolved = settings.resolve()?;
    match &cli.command {
        Command::VisibilityCurve {
            out,
            ratio_min,
            ratio_max,
            points,
            fock_atoms,
        } => {
            commands::visibility_curve(
                &resolved,
                out,
                *ratio_min,
                *ratio_max,
                *points,
                *fock_atoms,
            )?;
            Ok(true)
        }
        Command::Run { out } => {
            commands::run(&resolved, out)?;
            Ok(true)
        }
        Command::Ensemble { out } => {
            commands::ensemble(&resolved, out)?;
            Ok(true)
        }
        Command::Variance { out, fit_from } => {
            commands::variance(&resolved, out, *fit_from)?;
            Ok(true)
        }
        Command::Slope {
            out,
            atoms,
            ratios,
            fit_from,
        } => {
            commands::slope(&resolved, out, *atoms, ratios, *fit_from)?;
            Ok(true)
        }
        Command::Validate { out, check } => commands::validate(&resolved, out.as_deref(), check),
    }
}
