use std::process::ExitCode;

use clap::Parser;
use invheat_core::cli::{self, Cli, CliError};

fn run() -> anyhow::Result<u8> {
    let args = Cli::parse();
    Ok(cli::run(&args)?)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("invheat: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
