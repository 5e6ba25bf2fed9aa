//! `mvsk`: synthetic data, moment estimation, MVSK solves and method
//! benchmarks from the command line.
//!
//! Exit codes: 0 converged (or success), 1 usage error, 2 data error,
//! 3 resource guard, 4 solver stopped without converging.

mod commands;
mod config;
mod data;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mvsk_core::{Error, Termination};

use crate::config::{RunConfig, UsageError};

#[derive(Parser)]
#[command(name = "mvsk", version, about = "High-order portfolio optimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic returns CSV
    GenData(RunConfig),
    /// Estimate co-moment tensors from a returns CSV into a binary file
    Moments(RunConfig),
    /// Solve an MVSK or MVSK-tilting problem
    Solve(RunConfig),
    /// Compare methods over a sweep of problem sizes
    Bench(RunConfig),
}

const USAGE: u8 = 1;
const DATA: u8 = 2;
const RESOURCE: u8 = 3;
const NOT_CONVERGED: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return USAGE;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::TooManyAssets { .. }) => RESOURCE,
        Some(Error::InvalidParameter(_)) => USAGE,
        Some(Error::Subsolver { .. } | Error::Eigen(_)) => NOT_CONVERGED,
        _ => DATA,
    }
}

fn run(cmd: Cmd) -> anyhow::Result<u8> {
    match cmd {
        Cmd::GenData(cfg) => commands::gen_data(&cfg.resolve()?).map(|_| 0),
        Cmd::Moments(cfg) => commands::moments(&cfg.resolve()?).map(|_| 0),
        Cmd::Solve(cfg) => commands::solve(&cfg.resolve()?).map(|t| match t {
            Termination::Converged => 0,
            Termination::MaxIter => NOT_CONVERGED,
        }),
        Cmd::Bench(cfg) => commands::bench(&cfg.resolve()?).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
