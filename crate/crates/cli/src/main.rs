use std::process::ExitCode;

use clap::Parser;
use shapemem_cli::{execute, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Outcome::Validated { kind }) => {
            println!("{}: valid {kind} scenario", cli.common.scenario.display());
            ExitCode::SUCCESS
        }
        Ok(Outcome::Ran(summary)) => {
            for f in &summary.outputs {
                println!("wrote {}", summary.out_dir.join(f).display());
            }
            println!(
                "{} checks {}",
                summary.kind,
                if summary.passed { "passed" } else { "FAILED" }
            );
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
