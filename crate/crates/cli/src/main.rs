//! `scatter-swarm`: run solvers and studies from a JSON config.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver or validation
//! failure. Errors are printed to stderr as one JSON object.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Mode, Overrides, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "scatter-swarm", version, about = "Scattering by many small impedance particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in `solver.mode`.
    Run(Target),
    /// Limit-passage study over `solver.a_sequence`.
    Study(Target),
    /// Invariant suite; same as `run --mode validate`.
    Validate(Target),
}

#[derive(Args)]
struct Target {
    config: PathBuf,
    /// Override `solver.a`.
    #[arg(long)]
    a: Option<f64>,
    /// Override `solver.mode`.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Override `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SCATTER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::schema("env.SCATTER_THREADS", format!("expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::schema("env.SCATTER_THREADS", e.to_string()))
}

fn execute(cli: Cli) -> Result<run::Summary, CliError> {
    configure_threads()?;
    let (target, forced) = match &cli.command {
        Command::Run(t) | Command::Study(t) => (t, None),
        Command::Validate(t) => (t, Some(Mode::Validate)),
    };
    let mut cfg = RunConfig::load(&target.config)?;
    cfg.apply(&Overrides {
        a: target.a,
        mode: forced.or(target.mode),
        out: target.out.clone(),
    });
    match cli.command {
        Command::Study(_) => run::run_study(&cfg),
        _ => run::run(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(summary) => {
            println!("{}", serde_json::json!({"status": "ok", "summary": summary}));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
