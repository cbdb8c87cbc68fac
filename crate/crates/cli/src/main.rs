//! `rakeness` — design spectrally shaped ±1 sensing waveforms and measure
//! what they buy in Monte-Carlo reconstruction experiments.
//!
//! Typical session:
//!
//! ```text
//! rakeness design  --config ecg.cfg --out runs/ecg
//! rakeness sweep-r --config ecg.cfg --out runs/ecg
//! rakeness run     --config ecg.cfg --out runs/ecg --workers 8
//! rakeness summarize --out runs/ecg
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rakeness_cli::commands;

#[derive(Parser)]
#[command(
    name = "rakeness",
    version,
    about = "Spectrally shaped compressed-sensing experiment harness",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate second-order statistics from the training corpus and solve
    /// the shaping problem for every budget in r_list.
    Design {
        /// Experiment config file (flat key = value text).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for artifacts and results.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Execute the full Monte-Carlo trial table and write results.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: machine parallelism).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Give every row its own noise stream instead of sharing one
        /// noise draw across methods within a trial.
        #[arg(long)]
        unpair_noise: bool,
    },
    /// Aggregate results.csv into summary.csv and plot.svg.
    Summarize {
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduced-trial line search over r_list at the smallest M; designs
    /// missing budgets on the fly and reports the best budget.
    SweepR {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        unpair_noise: bool,
    },
    /// Export the heartbeat train/test corpora as CSV.
    GenEcg {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export the glyph train/test corpora as CSV.
    GenImages {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Miniature end-to-end check of both pipelines.
    Selftest {
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn dispatch(cmd: Cmd) -> Result<(), rakeness_cli::Failure> {
    match cmd {
        Cmd::Design { config, out, seed } => {
            let cfg = commands::load_config(&config, seed)?;
            commands::cmd_design(&cfg, &out)
        }
        Cmd::Run { config, out, workers, seed, unpair_noise } => {
            let mut cfg = commands::load_config(&config, seed)?;
            if unpair_noise {
                cfg.pair_noise = false;
            }
            commands::cmd_run(&cfg, &out, workers)
        }
        Cmd::Summarize { out } => commands::cmd_summarize(&out),
        Cmd::SweepR { config, out, workers, seed, unpair_noise } => {
            let mut cfg = commands::load_config(&config, seed)?;
            if unpair_noise {
                cfg.pair_noise = false;
            }
            commands::cmd_sweep_r(&cfg, &out, workers)
        }
        Cmd::GenEcg { config, out, seed } => {
            let cfg = commands::load_config(&config, seed)?;
            commands::cmd_gen_ecg(&cfg, &out)
        }
        Cmd::GenImages { config, out, seed } => {
            let cfg = commands::load_config(&config, seed)?;
            commands::cmd_gen_images(&cfg, &out)
        }
        Cmd::Selftest { workers } => commands::cmd_selftest(workers),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code as u8)
        }
    }
}
