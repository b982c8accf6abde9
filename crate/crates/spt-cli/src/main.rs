use std::process::ExitCode;

use clap::Parser;
use spt_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match spt_cli::commands::run(&cli, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
