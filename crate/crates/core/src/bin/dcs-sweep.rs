use std::process::ExitCode;

use clap::Parser;
use dcs_rjmin::cli::{execute, parse_config, CliArgs};

fn main() -> ExitCode {
    let args = CliArgs::parse();
    match parse_config(&args).and_then(|inv| execute(&inv)) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
