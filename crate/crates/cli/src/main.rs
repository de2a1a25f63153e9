use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epiassim_cli::artifacts::write_json;
use epiassim_cli::config::{RunConfig, ScoreArgs, SimulateArgs};
use epiassim_cli::io::{load_series, write_series};
use epiassim_cli::score::score_dir;
use epiassim_cli::simulate::simulate_synthetic;
use epiassim_cli::{run, CliError};

#[derive(Parser)]
#[command(name = "epiassim", version, about = "Sequential Bayesian forecasting of daily cases and deaths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every window of a series and write forecasts.
    Run(RunConfig),
    /// Generate a synthetic series and its truth sidecar.
    Simulate(SimulateArgs),
    /// Score forecast files against a held-out series.
    Score(ScoreArgs),
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(cfg) => {
            eprintln!("seed: {}", cfg.seed);
            match run::run(&cfg) {
                Ok(out) => match &out.failure {
                    None => {
                        eprintln!("{} window(s) written to {}", out.summary.windows.len(), cfg.out.display());
                        ExitCode::SUCCESS
                    }
                    Some(e) => fail(e),
                },
                Err(e) => fail(&e),
            }
        }
        Command::Simulate(args) => {
            let result = simulate_synthetic(&args.spec(), args.seed).and_then(|(series, truth)| {
                write_series(&series, &args.out)?;
                write_json(&args.truth_path(), &truth)
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::Score(args) => {
            let result = load_series(&args.data).and_then(|series| {
                let report = score_dir(&args.forecasts, &series)?;
                if let Some(p) = &args.report {
                    write_json(p, &report)?;
                }
                Ok(serde_json::to_string_pretty(&report)?)
            });
            match result {
                Ok(text) => {
                    let _ = writeln!(std::io::stdout(), "{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
