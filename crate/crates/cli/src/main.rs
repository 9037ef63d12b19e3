//! Command-line front end: train models, sweep ablation grids, synthesize
//! benchmark datasets, and validate the identification claim on random
//! models.

mod commands;
mod csvio;
mod error;
mod experiment;
mod outputs;
mod settings;

use clap::{Parser, Subcommand};

use crate::commands::{AblateArgs, SimulateArgs, TrainArgs, ValidateArgs};

#[derive(Parser, Debug)]
#[command(
    name = "cfrlab",
    version,
    about = "Treatment-effect estimation with anchor-domain gradient matching \
             and covariate matching, plus a linear-Gaussian SEM laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train on a dataset CSV and report within/out-of-sample metrics
    Train(TrainArgs),
    /// Sweep the (alpha, eps) grid over several seeds into one CSV
    Ablate(AblateArgs),
    /// Draw a synthetic benchmark dataset from a linear SEM
    Simulate(SimulateArgs),
    /// Check that approximate invariance yields approximate adjustment on
    /// random models
    ValidateTheorem(ValidateArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => commands::cmd_train(args),
        Command::Ablate(args) => commands::cmd_ablate(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::ValidateTheorem(args) => commands::cmd_validate_theorem(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        let mut source = std::error::Error::source(&err);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(err.exit_code());
    }
}
