use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{cmd_audit, cmd_sweep, cmd_synth, cmd_train, AuditOpts, SweepOpts, SynthOpts, TrainOpts};

#[derive(Debug, Parser)]
#[command(name = "reckoner", version, about = "Fair classification without sensitive attributes")]
pub struct Cli {
    /// Seed overriding the configured training and split seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (for `synth`, the CSV path).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run configuration (for `synth`, the generator settings).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a CSV and report fairness on its test split.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Disable the learnable input noise.
        #[arg(long)]
        no_noise: bool,
        /// Disable pseudo-learning and weight blending.
        #[arg(long)]
        no_pseudo: bool,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Fairness and confidence-bucket audit of predictions or a checkpoint.
    Audit {
        #[arg(long, conflicts_with_all = ["checkpoint", "data"])]
        predictions: Option<PathBuf>,
        #[arg(long, requires = "data")]
        checkpoint: Option<PathBuf>,
        #[arg(long, requires = "checkpoint")]
        data: Option<PathBuf>,
        /// Numeric column to histogram per bucket and group.
        #[arg(long)]
        feature: Option<String>,
        #[arg(long)]
        bins: Option<usize>,
        /// Bucket thresholds, comma separated.
        #[arg(long, value_delimiter = ',')]
        buckets: Option<Vec<f64>>,
        /// The two group names to compare, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        groups: Option<Vec<String>>,
    },
    /// Write a synthetic biased-label dataset.
    Synth,
    /// Train every point of a parameter grid.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

fn missing(flag: &str) -> i32 {
    eprintln!("error kind=config code=1 reason={:?}", format!("--{flag} is required"));
    1
}

pub fn run(cli: Cli) -> i32 {
    let out = cli.out.clone();
    let out_dir = || out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Train {
            data,
            no_noise,
            no_pseudo,
            alpha,
        } => {
            let Some(config) = cli.config else { return missing("config") };
            cmd_train(&TrainOpts {
                config,
                data,
                out: out_dir(),
                seed: cli.seed,
                no_noise,
                no_pseudo,
                alpha,
            })
        }
        Command::Audit {
            predictions,
            checkpoint,
            data,
            feature,
            bins,
            buckets,
            groups,
        } => cmd_audit(&AuditOpts {
            predictions,
            checkpoint,
            data,
            out: out_dir(),
            feature,
            bins,
            buckets,
            groups: groups.map(|g| [g[0].clone(), g[1].clone()]),
        }),
        Command::Synth => {
            let Some(config) = cli.config else { return missing("config") };
            cmd_synth(&SynthOpts {
                config,
                out: out.unwrap_or_else(|| PathBuf::from("synth.csv")),
                seed: cli.seed,
            })
        }
        Command::Sweep { grid, data } => {
            let Some(config) = cli.config else { return missing("config") };
            cmd_sweep(&SweepOpts {
                config,
                grid,
                data,
                out: out_dir(),
            })
        }
    }
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// exit with 1; `--help` and `--version` exit with 0.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    }
}
