use std::process::ExitCode;

use cascade_cli::{execute, Action, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Action::Print(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Action::Ran(outcome)) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            if outcome.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed runs: {}", outcome.failed.join(", "));
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
