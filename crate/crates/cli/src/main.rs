//! `aula`: acoustic quality analysis of recorded lectures from the
//! shell.
//!
//! Machine-readable output (JSON reports, CSV dumps) goes to stdout or
//! the requested file; diagnostics go to stderr. Exit codes: 0 success,
//! 1 usage, 2 bad data or files, 3 internal fault.

mod commands;
mod config;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::ConfigFlags;

#[derive(Debug, Parser)]
#[command(
    name = "aula",
    version,
    about = "Acoustic quality analysis of recorded lectures"
)]
struct Cli {
    #[command(flatten)]
    flags: ConfigFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump per-frame levels and voice features as CSV
    Features(commands::FeaturesArgs),
    /// Train the noise or voice models from a labelled corpus
    Train(commands::TrainArgs),
    /// Analyze one lecture with trained models
    Lecture(commands::LectureArgs),
    /// Locate the loudest room quadrant from four corner recordings
    Localize(commands::LocalizeArgs),
    /// Test how lecture noise associates with speech level and gender
    Correlate(commands::CorrelateArgs),
    /// Generate a deterministic synthetic lecture corpus
    Synth(commands::SynthArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<aula_core::Error> for CliError {
    fn from(err: aula_core::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let config = match cli.flags.resolve() {
        Ok(config) => config,
        Err(err) => return report(err),
    };
    let outcome = match &cli.command {
        Command::Features(args) => commands::features(&config, args),
        Command::Train(args) => commands::train(&config, args),
        Command::Lecture(args) => commands::lecture(&config, args),
        Command::Localize(args) => commands::localize(&config, args),
        Command::Correlate(args) => commands::correlate(&config, args),
        Command::Synth(args) => commands::synth(&config, args),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => report(err),
    }
}

fn report(err: CliError) -> i32 {
    match err {
        CliError::Usage(msg) => {
            eprintln!("error: {msg}");
            1
        }
        CliError::Data(msg) => {
            eprintln!("error: {msg}");
            2
        }
        CliError::Internal(msg) => {
            eprintln!("internal error: {msg}");
            3
        }
    }
}
