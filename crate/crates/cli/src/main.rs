//! llb: batch front-end for the spectral LLB solver.
//!
//! Exit codes: 0 pass, 1 numerical or audit failure, 2 usage/config error.

// NaN must fail validation comparisons, hence the negated forms.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use llb_spectral::error::Error;
use llb_spectral::verify::Level;

use commands::Outcome;

#[derive(Parser)]
#[command(
    name = "llb",
    about = "Spectral Galerkin solver for the high-temperature LLB equation, with built-in estimate audits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured problem and write ledger, summary and checkpoint
    Run {
        /// Path to a flat key = value configuration file
        config: PathBuf,
    },
    /// Run the built-in verification battery
    Verify {
        /// quick (under a minute) or full (adds convergence and cross-method studies)
        #[arg(long, default_value = "quick")]
        level: String,
        /// Directory for the audit report documents
        #[arg(long, default_value = "verify-reports")]
        out: PathBuf,
    },
    /// Self-convergence study over a nested family of mode counts
    Converge {
        /// Path to a flat key = value configuration file
        config: PathBuf,
        /// Increasing mode counts, e.g. 8,16,32,64
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        /// Exponent of the X^{-beta} convergence norm
        #[arg(long = "beta-bar")]
        beta_bar: Option<f64>,
        /// Time-integrability exponent of the L4 column
        #[arg(long = "p-bar", default_value_t = 8.0)]
        p_bar: f64,
    },
    /// Empirical Lipschitz probe of one right-hand-side map
    Probe {
        /// f1 | f2 | f3
        map: String,
        /// L2 radius of the probe ball
        #[arg(long, default_value_t = 1.0)]
        ball: f64,
        /// Number of random pairs
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Modes of the 1-D probe basis
        #[arg(long, default_value_t = 16)]
        modes: usize,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config } => commands::run_command(config),
        Command::Verify { level, out } => match Level::parse(level) {
            Ok(level) => commands::verify_command(level, out),
            Err(e) => Err(e),
        },
        Command::Converge {
            config,
            modes,
            beta_bar,
            p_bar,
        } => commands::converge_command(config, modes, *beta_bar, *p_bar),
        Command::Probe {
            map,
            ball,
            samples,
            seed,
            modes,
        } => commands::probe_command(map, *ball, *samples, *seed, *modes),
    };
    match outcome {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::AuditFailure(msg)) => {
            eprintln!("audit failure:\n{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
