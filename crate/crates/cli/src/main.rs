//! `evc`: F0 preparation, wavelet analysis, model training, conversion and
//! evaluation for emotional voice conversion.

mod cmd;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "evc", version, about = "Emotional voice conversion toolkit")]
struct Cli {
    /// Seed for every random choice (default: config seed, else 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-utterance work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Pipeline configuration JSON; flags override its values.
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interpolate, log-compress and z-normalize F0 contours.
    F0prep(cmd::f0prep::Args),
    /// Mexican-hat CWT of normalized log-F0 tracks.
    Cwt(cmd::wavelet::CwtArgs),
    /// Reconstruct tracks from scaleograms written by `cwt`.
    Icwt(cmd::wavelet::IcwtArgs),
    /// Write a synthetic two-emotion corpus.
    GenToy(cmd::toy::Args),
    /// Train a spectrum or prosody model.
    Train(cmd::train::Args),
    /// Convert utterances to a target emotion.
    Convert(cmd::convert::Args),
    /// Score converted utterances against references.
    Eval(cmd::eval::Args),
}

pub struct Context {
    pub config: PipelineConfig,
    pub seed: u64,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::config("ConfigError: --jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::config(format!("ConfigError: {e}")))?;
    }
    let config = PipelineConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let ctx = Context { config, seed };
    match cli.command {
        Command::F0prep(a) => cmd::f0prep::run(&ctx, a),
        Command::Cwt(a) => cmd::wavelet::run_cwt(&ctx, a),
        Command::Icwt(a) => cmd::wavelet::run_icwt(&ctx, a),
        Command::GenToy(a) => cmd::toy::run(&ctx, a),
        Command::Train(a) => cmd::train::run(&ctx, a),
        Command::Convert(a) => cmd::convert::run(&ctx, a),
        Command::Eval(a) => cmd::eval::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evc: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
