//! Experiment driver: dataset synthesis, mask generation, federated runs,
//! parameter sweeps and standalone metric evaluation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

mod commands;
mod args;

use clap::{Parser, Subcommand};

use fedmvc::Error;

#[derive(Parser)]
#[command(
    name = "fedmvc",
    version,
    about = "Federated incomplete multi-view clustering simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-view dataset (FVM1 matrices + manifest + labels).
    Synth(commands::SynthArgs),
    /// Generate a presence-mask CSV for a manifest.
    Mask(commands::MaskArgs),
    /// Run the federated pipeline for one or more seeds.
    Run(commands::RunArgs),
    /// Sweep beta or gamma over a value grid and collect metrics as CSV.
    Sweep(commands::SweepArgs),
    /// Evaluate predicted labels against ground truth.
    Eval(commands::EvalArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Mask(args) => commands::mask(args),
        Command::Run(args) => commands::run(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Eval(args) => commands::eval(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

/// Validation problems exit 2, runtime failures exit 1.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Shape(_) | Error::Format { .. } | Error::Json(_) => 2,
        Error::Protocol(_) | Error::NonFinite(_) | Error::Io(_) => 1,
    }
}
