//! Command-line front end for the `relhartree` solver.
//!
//! Each subcommand reads one JSON run configuration (the bundled one when
//! `--config` is absent), writes its artifacts under the output directory and
//! reports through the exit status: 0 success, 1 solver failure, 2 failed
//! post-check, 3 not applicable, 64 usage or config error, 65 bad data file.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relhartree::nehari::SolverError;
use thiserror::Error;

use crate::config::RunConfig;
use crate::output::Output;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("{module}: {message}")]
    Module { module: &'static str, message: String },
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 64,
            CliError::Format(_) => 65,
            CliError::Solver(_) | CliError::Module { .. } | CliError::Output(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "relhartree",
    version,
    about = "Ground states of √(−Δ+m²)u + Vu = (W∗F(u))f(u)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON); the bundled desk instance when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `outputs` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed, overriding `seed` in the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Only errors on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Ground state by Nehari descent, with post-checks.
    Solve,
    /// Compare the level with that of the problem with V ≡ V∞.
    LimitCompare,
    /// Check the half-space extension of a trace.
    ExtendCheck,
    /// Seeded inequality suites.
    Props,
    /// Exponential decay fit of a stored field.
    DecayFit,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::LimitCompare => "limit-compare",
            Command::ExtendCheck => "extend-check",
            Command::Props => "props",
            Command::DecayFit => "decay-fit",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::bundled(),
    };
    if let Some(dir) = &cli.out {
        cfg.outputs = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let cfg = resolve(cli)?;
    let out = Output::create(&cfg.outputs, cli.command.name(), cli.quiet)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg, &out),
        Command::LimitCompare => commands::limit_compare(&cfg, &out),
        Command::ExtendCheck => commands::extend_check(&cfg, &out),
        Command::Props => commands::props(&cfg, &out),
        Command::DecayFit => commands::decay_fit(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
