//! Command-line front end: CSV ingestion, run configuration and reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod report;

pub use config::RunConfig;
pub use error::{CliError, Result};

use args::{Cli, Command};

/// Runs a parsed command line and returns the report text.
pub fn execute(cli: &Cli) -> Result<(String, Option<std::path::PathBuf>)> {
    Ok(match &cli.command {
        Command::Test(a) => (commands::cmd_test(a)?, a.out.clone()),
        Command::Power(a) => (commands::cmd_power(a)?, a.out.clone()),
        Command::Bounds(a) => (commands::cmd_bounds(a)?, a.out.clone()),
        Command::Tailratio(a) => (commands::cmd_tailratio(a)?, a.out.clone()),
        Command::Gumbel(a) => (commands::cmd_gumbel(a)?, a.out.clone()),
    })
}

/// Sizes the global worker pool from `KMAX_THREADS` (unset or 0 = automatic).
pub fn init_threads() -> Result<()> {
    let threads = match std::env::var("KMAX_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("KMAX_THREADS must be a nonnegative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Config(e.to_string()))
}
