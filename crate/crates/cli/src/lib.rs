//! Command-line front end: one JSON config per run, artifacts written
//! atomically into an output directory, a short summary on stdout.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod config;
mod commands;
pub mod error;
mod output;

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "fracvisc", version, about = "Fractional viscoelastic model calibration and sensitivity analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a two-branch model to a master curve with particle swarms.
    Fit(Common),
    /// Local (elasticity) sensitivity indices and their norms.
    Lsa(Common),
    /// First- and total-order Sobol' indices.
    Gsa(Common),
    /// Storage and loss moduli over a frequency grid.
    Eval(Common),
    /// Synthetic master curve from a model, optionally with noise.
    Synth(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides the configuration; default `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Caps worker threads. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Runs one command and returns the summary lines and the files written.
pub fn run(command: &Command) -> Result<(Vec<String>, Vec<PathBuf>)> {
    let common = match command {
        Command::Fit(c) | Command::Lsa(c) | Command::Gsa(c) | Command::Eval(c) | Command::Synth(c) => c,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(command, common))
}

fn out_dir(flag: &Option<PathBuf>, cfg: &Option<PathBuf>, base: &Path) -> PathBuf {
    match (flag, cfg) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => base.join(p),
        (None, None) => PathBuf::from("."),
    }
}

fn dispatch(command: &Command, common: &Common) -> Result<(Vec<String>, Vec<PathBuf>)> {
    let path = &common.config;
    let (outcome, dir) = match command {
        Command::Fit(_) => {
            let (cfg, base) = config::load::<config::FitConfig>(path)?;
            (commands::fit(&cfg, &base, common.seed)?, out_dir(&common.out, &cfg.out, &base))
        }
        Command::Lsa(_) => {
            let (cfg, base) = config::load::<config::LsaConfig>(path)?;
            (commands::lsa(&cfg, &base, common.seed)?, out_dir(&common.out, &cfg.out, &base))
        }
        Command::Gsa(_) => {
            let (cfg, base) = config::load::<config::GsaConfig>(path)?;
            (commands::gsa(&cfg, &base, common.seed)?, out_dir(&common.out, &cfg.out, &base))
        }
        Command::Eval(_) => {
            let (cfg, base) = config::load::<config::EvalConfig>(path)?;
            (commands::eval(&cfg, &base)?, out_dir(&common.out, &cfg.out, &base))
        }
        Command::Synth(_) => {
            let (cfg, base) = config::load::<config::SynthConfig>(path)?;
            (commands::synth(&cfg, &base, common.seed)?, out_dir(&common.out, &cfg.out, &base))
        }
    };
    let written = outcome.artifacts.commit(&dir)?;
    Ok((outcome.summary, written))
}
