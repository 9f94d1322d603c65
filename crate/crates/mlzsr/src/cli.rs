use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{LossName, ModeName, ScenarioName, Variant};

#[derive(Debug, Parser)]
#[command(
    name = "mlzsr",
    version,
    about = "Multi-label zero-shot recognition over segment sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed of the command's random choices; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML config file, or a run manifest (`.json`) to replay its settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Primary output file. A run manifest is written beside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineName {
    Rgs,
    Dsp,
    Conse,
    Costa,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset from the `[data]` config table.
    Generate,
    /// Split a dataset into train/val/test instances and known/unseen labels.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeName>,
        /// Comma-separated unseen label ids.
        #[arg(long, value_delimiter = ',', conflicts_with = "unseen_count")]
        unseen: Option<Vec<usize>>,
        /// Number of unseen labels to sample.
        #[arg(long)]
        unseen_count: Option<usize>,
        #[arg(long)]
        val_count: Option<usize>,
        /// Comma-separated train,val,test fractions.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        fractions: Option<Vec<f64>>,
    },
    /// Train the visual and semantic models alternately.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[arg(long, value_enum)]
        loss: Option<LossName>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        /// Training log path (default: the output path with a `.log` extension).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Also write a text dump of the checkpoint here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Score the test instances with a checkpoint or a baseline and report metrics.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, required_unless_present_any = ["baseline", "baseline_model"], conflicts_with_all = ["baseline", "baseline_model"])]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "baseline_model")]
        baseline: Option<BaselineName>,
        /// Previously saved DSP, ConSE or COSTA model.
        #[arg(long)]
        baseline_model: Option<PathBuf>,
        /// Save the fitted DSP, ConSE or COSTA model here.
        #[arg(long, requires = "baseline")]
        save_model: Option<PathBuf>,
        #[arg(long, value_enum)]
        scenario: Option<ScenarioName>,
        #[arg(long)]
        k: Option<usize>,
        /// Also write the test-set score dump here.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Fuse two score dumps by averaging their min-max normalized scores.
    Fuse {
        #[arg(long, num_args = 2, required = true)]
        scores: Vec<PathBuf>,
        /// Report path (default: the output path with a `.report` extension).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        scenario: Option<ScenarioName>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Compare every analytic gradient with central finite differences.
    Gradcheck {
        #[arg(long)]
        cases: Option<usize>,
        /// Maximum relative error for every family (default: per family).
        #[arg(long)]
        tolerance: Option<f64>,
    },
}
