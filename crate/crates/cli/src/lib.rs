//! The `pccd` command-line tool.
//!
//! Every command reads a [`config::RunConfig`] (defaults, then `--config`,
//! then flags), writes its outputs under the output directory and records a
//! run manifest there. Exit codes: 0 success, 1 usage or config error,
//! 2 empty or invalid input set, 3 numeric failure.

pub mod args;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;

use std::ffi::OsString;

use clap::Parser;

use args::Cli;
use config::RunConfig;
use error::{CliError, Result};

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.global.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let argv: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let cfg = RunConfig::load(cli.global.config.as_deref(), &cli.overrides()?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cli.global.jobs)))?;
    pool.install(|| commands::dispatch(&cli.command, cfg, argv))
}
