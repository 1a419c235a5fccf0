use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dqgan_cli::commands;
use dqgan_cli::config::RunConfig;
use dqgan_cli::Outcome;

#[derive(Parser)]
#[command(name = "dqgan", version, about = "Dissipative quantum GAN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic linear dataset as CSV, plus a manifest sidecar.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides dataset.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train generator and discriminator on a dataset.
    Train {
        #[arg(long, conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Re-run the training recorded in a previous manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Overrides training.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, required_unless_present = "manifest")]
        data: Option<PathBuf>,
        /// Output directory for weights.json, trace.csv and manifest.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw samples from a trained generator.
    Sample {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hellinger distances between two sample files.
    Eval {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        /// Directory for histogram CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the effective model against the full open-system model.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides validation.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Outcome<String> {
    match cli.command {
        Command::Synth { config, seed, out } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.dataset.seed = s;
            }
            commands::cmd_synth(&cfg, &out)
        }
        Command::Train {
            config,
            manifest,
            seed,
            data,
            out,
        } => {
            if let Some(m) = manifest {
                return commands::cmd_train_from_manifest(&m, seed, &out);
            }
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.training.seed = s;
            }
            commands::cmd_train(&cfg, &data.expect("required by clap"), &out)
        }
        Command::Sample { weights, n, seed, out } => commands::cmd_sample(&weights, n, seed, &out),
        Command::Eval { real, generated, bins, out } => commands::cmd_eval(&real, &generated, bins, out.as_deref()).map(|(_, r)| r),
        Command::Validate { config, seed } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.validation.seed = s;
            }
            commands::cmd_validate(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code() as u8)
        }
    }
}
