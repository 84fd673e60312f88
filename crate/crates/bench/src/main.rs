//! `vde`: benchmark harness for decomposition-based rectified-flow sampling.

use clap::{Parser, Subcommand};

use vde_bench::commands;

#[derive(Parser)]
#[command(
    name = "vde",
    version,
    about = "Rectified-flow sampling with velocity decomposition and estimation",
    long_about = "Runs full-step baselines and decomposition-estimated sampling over seeded \
                  trajectories, reporting NFE and retention metrics. Experiment commands read a \
                  JSON config (see README); flags override the file, and VDE_SEED overrides the \
                  base seed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the MLP velocity field on a 2-D toy dataset
    Train(commands::train::TrainArgs),
    /// Sample trajectories, writing per-seed sample JSONs and trace CSVs
    Sample(commands::RunArgs),
    /// Sweep anchor intervals and aggregate retention metrics vs the baseline
    Bench(commands::RunArgs),
    /// Record component dynamics (coefficients, direction cosines) of full runs
    Trace(commands::RunArgs),
    /// Print a schedule's plan string and NFE
    Nfe(commands::nfe::NfeArgs),
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(args) => commands::train::run(args).map(|()| 0),
        Command::Sample(args) => commands::sample::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Trace(args) => commands::trace::run(args),
        Command::Nfe(args) => commands::nfe::run(args).map(|()| 0),
    };
    match outcome {
        Ok(0) => std::process::ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("error: {failures} trajectories did not complete");
            std::process::ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
