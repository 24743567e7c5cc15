//! Command-line front end: argument parsing, config merging and the
//! subcommand drivers behind the `rbfrk` binary.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::Parser;

pub use error::{CliError, Result};

/// Parse `argv` (program name first), merge any config file and run.
/// Help and version requests print and exit through clap.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv = config::expand(argv.into_iter().map(Into::into).collect())?;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            return Err(CliError::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    commands::run(cli.command)
}
