//! `cartan`: scenario runner for the connection toolkit.
//!
//! ```text
//! cartan run <config.json> [--seed N] [--out DIR]
//! cartan --selftest [--seed N]
//! ```
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.

mod config;
mod error;
mod output;
mod scenarios;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{pretty, Report};
use crate::scenarios::Context;

#[derive(Debug, Parser)]
#[command(name = "cartan", version, about = "Develop trajectories, compute holonomy, check connection axioms and verify Maxwell's equations")]
struct Cli {
    /// Run the invariant suite and print a pass/fail table.
    #[arg(long)]
    selftest: bool,
    /// Seed for randomized sampling; overrides seeds in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario (or array of scenarios) in a JSON config file.
    Run { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.selftest {
        return if selftest::run(cli.seed.unwrap_or(0)) { ExitCode::SUCCESS } else { ExitCode::from(3) };
    }
    let Some(Command::Run { config }) = cli.command else {
        eprintln!("error: nothing to do; use `cartan run <config.json>` or `cartan --selftest`");
        return ExitCode::from(2);
    };
    match run_file(&config, cli.seed, &cli.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.exit_code()),
    }
}

/// Loads, runs and writes every scenario in `config`. Scenarios run
/// concurrently; results are reported in config order.
fn run_file(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let configs = config::load(config).inspect_err(|e| eprintln!("error: {e}"))?;
    let base_dir = config.parent().unwrap_or(Path::new("."));
    let ctx = Context { base_dir, seed };
    let results = run_all(&configs, &ctx);

    let mut summaries = Vec::new();
    let mut first_error = None;
    for (cfg, result) in configs.iter().zip(results) {
        let outcome = result.and_then(|mut report| {
            report.write(out, &cfg.stem(), cfg.output().format)?;
            Ok(report.summary)
        });
        match outcome {
            Ok(summary) => summaries.push(summary),
            Err(e) => {
                eprintln!("error: {} ({}): {e}", cfg.kind(), cfg.stem());
                first_error.get_or_insert(e);
            }
        }
    }
    if configs.len() == 1 {
        if let Some(s) = summaries.first() {
            println!("{}", pretty(s));
        }
    } else {
        println!("{}", pretty(&summaries));
    }
    first_error.map_or(Ok(()), Err)
}

fn run_all(configs: &[ScenarioConfig], ctx: &Context) -> Vec<Result<Report, CliError>> {
    if configs.len() == 1 {
        return vec![scenarios::run(&configs[0], ctx)];
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|cfg| s.spawn(move || scenarios::run(cfg, ctx))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(CliError::Numerical("scenario thread panicked".into())))).collect()
    })
}
