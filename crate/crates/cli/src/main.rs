mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::BaselineKind;
use config::{RunConfig, SEED_ENV};

/// Online ridesharing simulator: demand estimation, pool simulation, baselines and sweeps.
#[derive(Parser)]
#[command(name = "rideshare", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file with flat `section.key` entries.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set passengers.n=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        RunConfig::load(self.config.as_deref(), &self.overrides, std::env::var(SEED_ENV).ok())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate pickup and drop-off distributions from trip records.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Trip record CSV (defaults to `input.records`).
        #[arg(long)]
        records: Option<PathBuf>,
        /// Where to write the distribution file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write synthetic trip records in the yellow-cab column layout.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the online policy on a generated stream.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a baseline policy.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: BaselineKind,
        /// Saved passenger stream; generated from the config seed when absent.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Run the online policy once per flexibility value on one stream.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated flexibility values (defaults to `sweep.epsilons`).
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Run the online policy on a saved passenger stream.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stream: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Estimate { common, records, output } => commands::estimate(&common.load()?, records, &output),
        Command::Synth { common, n, seed, output } => commands::synth(&common.load()?.bbox, n, seed, &output),
        Command::Simulate { common } => commands::simulate(&common.load()?),
        Command::Baseline { common, kind, stream } => commands::baseline(&common.load()?, kind, stream.as_deref()),
        Command::Sweep { common, epsilons, stream } => commands::sweep(&common.load()?, epsilons, stream.as_deref()),
        Command::Replay { common, stream } => commands::replay(&common.load()?, &stream),
    }
}
