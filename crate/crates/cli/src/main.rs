mod args;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::{CliError, CliResult, Output, RunConfig};

const DEFAULT_SEED: u64 = 1;

fn thread_pool() -> CliResult<()> {
    let Ok(v) = std::env::var("LASSO_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Input(format!(
            "LASSO_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    thread_pool()?;
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let out = Output::new(cli.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("out")))?;
    match cli.command {
        Command::Curve(a) => commands::curve(a.or(cfg.curve), &out),
        Command::Validate(a) => commands::validate(a.or(cfg.validate), &out),
        Command::Fit(a) => commands::fit(a.or(cfg.fit), seed, &out),
        Command::Fk(a) => commands::fk(a.or(cfg.fk), &out),
        Command::Workspace(a) => commands::workspace(a.or(cfg.workspace), seed, &out),
        Command::Control(a) => commands::control(a.or(cfg.control), &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
