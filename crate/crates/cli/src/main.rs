mod cmd;
mod io;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alcrowd", version, about = "Crowd label QC and pool-based active-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, deduplicate and language-filter a JSON-lines dataset
    Preprocess(cmd::preprocess::Args),
    /// Validate crowd responses and report agreement statistics
    Qc(cmd::qc::Args),
    /// Benchmark the learners with full supervision
    Train(cmd::train::Args),
    /// Run an active-learning simulation
    Simulate(cmd::simulate::Args),
    /// Generate a synthetic labeled corpus
    Synth(cmd::synth::Args),
    /// Compare strategies from a learning-curve CSV
    Report(cmd::report::Args),
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ALCROWD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("ALCROWD_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    init_threads()?;
    match cli.command {
        Command::Preprocess(a) => cmd::preprocess::run(a),
        Command::Qc(a) => cmd::qc::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::Report(a) => cmd::report::run(a),
    }
}

/// Fails when a required path was given neither as a flag nor in the config.
fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing {flag} (pass the flag or set it in --config)"),
    }
}
