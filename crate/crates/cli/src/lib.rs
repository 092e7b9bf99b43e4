//! Command-line surface over the qforge engine.
//!
//! Exit codes: 0 success, 2 input or flag problem, 3 engine error.

use std::process::ExitCode;

use clap::Parser;

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;
pub mod fileio;
pub mod output;

pub use error::{CliError, CliResult};

pub fn main_entry() -> ExitCode {
    let cli = args::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match commands::dispatch(cli.command, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        // A closed pipe on stdout is the reader's choice, not a failure.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
