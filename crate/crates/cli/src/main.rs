//! `noisyfnn`: run noise-propagation experiments from a TOML config.
//!
//! Exit codes: 0 on success, 1 for configuration problems (bad flags,
//! malformed config, missing files), 2 when the computation itself fails.

mod commands;
mod config;
mod generate;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use noisyfnn::mitigation::GhostMode;

use config::{parse_ghost, parse_pool, ExperimentConfig, Overrides, Preset};

#[derive(Parser, Debug)]
#[command(name = "noisyfnn", version, about = "Noise propagation and mitigation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Connection statistics of every weight matrix.
    Stats,
    /// Empirical and predicted output SNR over a set of inputs.
    SnrSweep,
    /// Train the 784-100-10 MNIST classifier.
    MnistTrain,
    /// Test accuracy of a trained classifier under noise.
    MnistEval,
    /// Output SNR of the winning neuron over random test digits.
    MnistSnr,
}

#[derive(Args, Debug)]
struct Flags {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Presentations per input.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long = "da-u", global = true)]
    da_u: Option<f64>,
    #[arg(long = "da-c", global = true)]
    da_c: Option<f64>,
    #[arg(long = "dm-u", global = true)]
    dm_u: Option<f64>,
    #[arg(long = "dm-c", global = true)]
    dm_c: Option<f64>,
    /// direct, adaptive or wg=<value>
    #[arg(long, global = true, value_parser = parse_ghost)]
    ghost: Option<GhostMode>,
    /// m=<k>
    #[arg(long, global = true, value_parser = parse_pool)]
    pool: Option<usize>,
    #[arg(long, global = true, value_enum)]
    plan: Option<Preset>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Network description (JSON), replacing the config's network.
    #[arg(long, global = true)]
    network: Option<PathBuf>,
    /// Trained MNIST model (JSON).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Directory holding the MNIST IDX files.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    presentations: Option<usize>,
    #[arg(long, global = true)]
    digits: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            k: self.k,
            da_u: self.da_u,
            da_c: self.da_c,
            dm_u: self.dm_u,
            dm_c: self.dm_c,
            ghost: self.ghost,
            pool: self.pool,
            plan: self.plan,
            out: self.out.clone(),
            threads: self.threads,
            network: self.network.clone(),
            model: self.model.clone(),
            data: self.data.clone(),
            presentations: self.presentations,
            digits: self.digits,
            epochs: self.epochs,
        }
    }
}

/// A problem with the inputs rather than with the computation.
#[derive(Debug)]
pub struct ConfigError(String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }

    pub fn from_lib(e: noisyfnn::Error) -> Self {
        ConfigError(e.to_string())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&cli.flags.overrides());
    cfg.validate()?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ConfigError::new(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::Stats => commands::stats(&cfg),
        Command::SnrSweep => commands::snr_sweep(&cfg),
        Command::MnistTrain => commands::mnist_train(&cfg),
        Command::MnistEval => commands::mnist_eval(&cfg),
        Command::MnistSnr => commands::mnist_snr(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
