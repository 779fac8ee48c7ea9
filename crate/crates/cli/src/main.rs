//! `advsec` experiment runner.

mod commands;
mod config;
mod error;
mod logging;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "advsec", version, about = "Adversarial robustness experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for per-sample attacks.
    #[arg(long)]
    workers: Option<usize>,
    /// Replaces every seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// off, error, warn, info, debug or trace.
    #[arg(long, default_value = "info")]
    log_level: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the configured model and save it.
    Train(CommonArgs),
    /// Run evasion attacks on test samples.
    Attack(CommonArgs),
    /// Accuracy under attack over an epsilon grid.
    Seceval(CommonArgs),
    /// Optimize poison points against the configured victim.
    Poison(CommonArgs),
    /// Attribute a prediction to features or training points.
    Explain(CommonArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &CommonArgs) {
        match self {
            Self::Train(a) => ("train", a),
            Self::Attack(a) => ("attack", a),
            Self::Seceval(a) => ("seceval", a),
            Self::Poison(a) => ("poison", a),
            Self::Explain(a) => ("explain", a),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (name, args) = cli.command.parts();
    let level = logging::parse_level(&args.log_level)
        .ok_or_else(|| CliError::Config(format!("--log-level: unknown level {:?}", args.log_level)))?;
    logging::init(level);

    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.override_seeds(seed);
    }
    cfg.validate()?;
    commands::check_blocks(name, &cfg)?;
    let workers = args.workers.or(cfg.workers).unwrap_or(1);
    if workers == 0 {
        return Err(CliError::Config("--workers: must be positive".into()));
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("advsec-out"));
    commands::execute(name, &cfg, &out, workers)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            logging::detach_file();
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
