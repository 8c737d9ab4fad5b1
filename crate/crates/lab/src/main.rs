//! `chb-lab`: command-line driver for the phase-field tumour-growth
//! experiments.

use chb_lab::commands::{self, LabError};
use chb_lab::config::parse_config;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chb-lab",
    version,
    about = "Phase-field tumour-growth experiments: evolution, stationary states, and \
             regularization sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dotted-path overrides, e.g. `--set grid.nx=128`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory for ledgers, snapshots, and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the time evolution and emit the diagnostics ledger.
    Simulate,
    /// Solve for a stationary state and verify its residuals.
    Stationary,
    /// Sweep the regularized-potential inequality margins.
    PotentialCheck,
    /// Time-step refinement study of the mass-identity defect.
    Convergence,
    /// Compare Brinkman flow against its Darcy limit on one snapshot.
    DarcyLimit,
    /// Rerun a scenario over descending regularization widths.
    DeltaContinuation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match parse_config(cli.config.as_deref(), &cli.set) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &cli.out),
        Command::Stationary => commands::stationary(&cfg, &cli.out),
        Command::PotentialCheck => commands::potential_check(&cfg, &cli.out),
        Command::Convergence => commands::convergence(&cfg, &cli.out),
        Command::DarcyLimit => commands::darcy_limit(&cfg, &cli.out),
        Command::DeltaContinuation => commands::delta_continuation(&cfg, &cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ LabError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
