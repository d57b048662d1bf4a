use std::process::ExitCode;

use clap::Parser;

use c2f_cli::cli::{dispatch, Cli};
use c2f_cli::exit_code;

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("c2f: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
