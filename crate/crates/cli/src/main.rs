use std::process::ExitCode;

use clap::Parser;
use txforge_cli::commands::{execute, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version are not errors; 2 is reserved for violations.
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("txforge: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
