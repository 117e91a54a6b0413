//! Command-line experiment harness for the PMI key-exchange simulator.

mod commands;
mod config;
mod csvfmt;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;

/// Exit code 1: configuration or I/O problems. Exit code 2: the experiment
/// ran but missed an acceptance-relevant target (calibration miss, rekey
/// budget exhausted).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Acceptance(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Acceptance(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Acceptance(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "pmopi",
    about = "Physical-layer key exchange from MIMO precoding indices: channel calibration, evaluation curves, and key-exchange demos",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Search the delay-spread grid for a ~20-subcarrier coherence crossing.
    Calibrate,
    /// Frequency-correlation curve as CSV (separation vs. correlation).
    FigCorr,
    /// PMI match probability vs. sounding delay, per velocity and mode.
    FigPmiTime,
    /// PMI match probability vs. estimation SNR, per mode.
    FigPmiSnr,
    /// One full key exchange: key sizes, match status, Eve's hits, payload demo.
    Keyexchange,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.overrides.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };
    let result = match cli.command {
        Command::Calibrate => commands::cmd_calibrate(&cfg),
        Command::FigCorr => commands::cmd_fig_corr(&cfg),
        Command::FigPmiTime => commands::cmd_fig_pmi_time(&cfg),
        Command::FigPmiSnr => commands::cmd_fig_pmi_snr(&cfg),
        Command::Keyexchange => commands::cmd_keyexchange(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
