//! `qswitch`: cycle reports, sweeps, gain maps, optimal angles and circuit checks.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Params, Resolved};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Consistency(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Consistency(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("config error: {m}"),
            CliError::Consistency(m) => format!("consistency error: {m}"),
            CliError::Runtime(m) => format!("error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qswitch",
    version,
    about = "Qubit heat engine fuelled by measurements in superposed order"
)]
#[command(
    after_help = "Defaults: a-grid 0:1:51 with a' = 1 - a, map grid 101x101, beta*eps list 0.1,1,10, \
                        shots 8000, reps 10, seed 1. Config files hold `key = value` lines; flags win."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One cycle per family as JSON
    Cycle,
    /// Branch quantities along the a-grid
    Sweep,
    /// Optimized gain over the (a, a') square
    Map,
    /// Optimal control angle along a' = 1 - a
    OptimalTheta,
    /// Circuit pipeline against the analytic branches
    CircuitCompare,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = Resolved::from_flags(cli.params)?;
    let text = match cli.command {
        Command::Cycle => commands::cycle(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Map => commands::map(&cfg)?,
        Command::OptimalTheta => commands::optimal_theta(&cfg)?,
        Command::CircuitCompare => commands::circuit_compare(&cfg)?,
    };
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.code())
        }
    }
}
