//! blochlab: command line front end for the estimation experiments.
//!
//! Exit codes: 0 on success, 2 on usage or domain errors, 3 on numeric
//! failures (for example a Fock cutoff too small for the requested block).
//! Given equal flags and seed, every command writes byte-identical CSV;
//! only the sidecar timestamp differs between runs.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ConfigFile};
use commands::{CliError, Globals};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let workers = cli.workers.or(cfg.workers);
    let globals = Globals {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        out: cli.out.clone().or_else(|| cfg.out.clone()),
        workers,
    };
    let body = move || dispatch(cli.command, &cfg, &globals);
    match workers {
        None => body(),
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?
            .install(body),
    }
}

fn dispatch(cmd: Command, cfg: &ConfigFile, g: &Globals) -> Result<(), CliError> {
    match cmd {
        Command::PoissonRisk(a) => commands::cmd_poisson_risk(&a, cfg, g),
        Command::Risk(a) => commands::cmd_risk(&a, cfg, g),
        Command::Scaling(a) => commands::cmd_scaling(&a, cfg, g),
        Command::LanCheck(a) => commands::cmd_lan_check(&a, cfg, g),
        Command::Concentration(a) => commands::cmd_concentration(&a, cfg, g),
        Command::MetricsCheck(a) => commands::cmd_metrics_check(&a, cfg, g),
    }
}
