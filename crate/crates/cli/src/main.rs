use std::process::ExitCode;

use lll_phase_cli::{run, CliError, RunConfig};

fn main() -> ExitCode {
    let result = RunConfig::parse_args(std::env::args_os().skip(1)).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(CliError::Clap(e).exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
