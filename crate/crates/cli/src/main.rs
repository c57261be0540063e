use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use identkit_cli::commands;

/// Parameter identification with a hybrid GA + Levenberg-Marquardt strategy.
#[derive(Parser)]
#[command(name = "identkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uniform scan, distribution classification and domain reduction.
    Scan(RunArgs),
    /// One hybrid GA + LM identification run.
    Identify(RunArgs),
    /// Repeated seeded hybrid runs with the ensemble topology analysis.
    Ensemble(RunArgs),
    /// Full strategy: scan, reduce, ensemble, refine until conclusive.
    Pipeline(RunArgs),
    /// Generate the configured synthetic dataset as CSV files.
    Synth(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Output directory (overrides `output_dir` from the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scan(args) => commands::run_scan(&args.config, args.out.as_deref()),
        Command::Identify(args) => commands::run_identify(&args.config, args.out.as_deref()),
        Command::Ensemble(args) => commands::run_ensemble(&args.config, args.out.as_deref()),
        Command::Pipeline(args) => commands::run_pipeline(&args.config, args.out.as_deref()),
        Command::Synth(args) => commands::run_synth(&args.config, args.out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
