//! `gausslin`: estimation, verification and prior construction from the shell.
//!
//! Exit codes: 0 success, 1 verification failed, 2 usage or input error,
//! 3 numerical failure, 4 construction impossible.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// A failed run: exit code plus message for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn construction(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<gausslin::Error> for Failure {
    fn from(e: gausslin::Error) -> Self {
        use gausslin::Error::*;
        let code = match e {
            NoConvergence { .. }
            | QuadratureUnderflow { .. }
            | EmptyPosterior { .. }
            | RankDeficientGrid => 3,
            NoZeroFound { .. } => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Verify(a) => commands::verify(a),
        Command::ConstructPrior(a) => commands::construct_prior(a),
        Command::Fig1(a) => commands::fig1(a),
        Command::ScanLinearity(a) => commands::scan_linearity(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
