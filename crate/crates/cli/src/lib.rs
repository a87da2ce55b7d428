//! Command-line front end for the `entrobound` library.

pub mod config;
pub mod error;
pub mod ingest;
pub mod run;

use clap::Parser;

use crate::config::{Cli, ExperimentConfig};
use crate::error::{CliError, CliResult};

/// Caps the worker pool at `ENTROBOUND_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("ENTROBOUND_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::Config(format!("ENTROBOUND_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = init_threads()
        .and_then(|_| ExperimentConfig::from_cli(cli))
        .and_then(|cfg| run::run(&cfg));
    match result {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.one_line());
            e.exit_code()
        }
    }
}
