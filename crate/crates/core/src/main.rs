use std::process::ExitCode;

use clap::Parser;
use macrolab::cli::{execute, Cli};

fn main() -> ExitCode {
    // clap prints help and version to stdout with status 0, usage errors with 2.
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
