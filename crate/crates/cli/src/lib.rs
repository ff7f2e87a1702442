//! Command-line front end for `ionrotor-core`.
//!
//! Settings come from defaults, then an optional TOML file, then flags.
//! Every run can dump its effective settings; feeding the dump back with
//! `--config` reproduces the output byte for byte.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;

use std::ffi::OsString;
use std::fs;

use clap::Parser;

use crate::args::Cli;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::{Pool, Progress};
use crate::output::emit;

/// Parses `argv`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ionrotor: {e}");
            e.exit_code()
        }
    }
}

/// Defaults, then the config file, then flags.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = effective_config(&cli)?;
    let (dump, jobs, quiet) = (cli.dump_config, cli.jobs, cli.quiet);
    cli.apply(&mut cfg);
    if dump {
        return emit(&cfg.to_toml(), None);
    }
    cfg.validate()?;
    let pool = Pool::new(jobs)?;
    let out = commands::execute(&cfg, &pool, Progress { quiet })?;
    emit(&out.data.render(cfg.run.format), cfg.run.output.as_deref())?;
    if let (Some(fit), Some(path)) = (&out.fit, &cfg.run.fit_output) {
        emit(&fit.render(cfg.run.format), Some(path))?;
    }
    Ok(())
}
