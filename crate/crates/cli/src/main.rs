//! `heavycs`: confidence sequences, simulations, coverage audits and timings
//! from the command line.
//!
//! Data goes to stdout (or `--out`); diagnostics go to stderr. Exit status is
//! 0 on success, 2 for usage and data errors, 3 for numeric failures.

mod args;
mod bench;
mod cs;
mod error;
mod output;
mod sim;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Cs(a) => cs::run(&a),
        Command::Simulate(a) => sim::simulate(&a),
        Command::Audit(a) => sim::audit(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heavycs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
