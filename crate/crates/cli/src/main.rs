use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noisimrl::commands::{self, EvalMode};
use noisimrl::config::{ExperimentConfig, Overrides, Profile};
use noisimrl::{CliError, Result};

/// Learn circuit noise models with reinforcement learning and compare them
/// against randomized benchmarking.
#[derive(Debug, Parser)]
#[command(name = "noisimrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 1 gives a fully serial run.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Noise preset overriding the configuration (`1q`, `3q-high`, `3q-low`).
    #[arg(long, global = true)]
    noise: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate circuits and their noisy output states.
    GenDataset,
    /// Train a policy on a dataset.
    Train {
        /// Defaults to `<out>/<experiment>_dataset.json`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Continue from a `_resume` checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Characterize the configured noise with randomized benchmarking.
    Rb,
    /// Compare the trained policy with the reference models.
    Eval {
        #[arg(long, value_enum, default_value = "fixed")]
        mode: EvalMode,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Insert learned noise into a circuit and simulate it.
    Apply {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        circuit: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let base = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.finalize(&Overrides { seed: cli.seed, profile: cli.profile, out_dir: cli.out, noise: cli.noise })?;
    match &cli.command {
        Command::GenDataset => commands::gen_dataset(&cfg),
        Command::Train { dataset, resume } => commands::train_cmd(&cfg, dataset.as_deref(), resume.as_deref()),
        Command::Rb => commands::rb(&cfg),
        Command::Eval { mode, checkpoint } => commands::eval(&cfg, *mode, checkpoint.as_deref()),
        Command::Apply { checkpoint, circuit } => commands::apply(&cfg, checkpoint.as_deref(), circuit),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
