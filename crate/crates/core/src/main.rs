use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = apt_roll::cli::Cli::parse();
    let env: Vec<(String, String)> = std::env::vars().collect();
    match apt_roll::cli::run(&cli, &env) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for p in &outcome.outputs {
                println!("wrote {}", p.display());
            }
            if outcome.errors == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
