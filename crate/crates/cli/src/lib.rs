//! The `complexity` command-line pipeline.
//!
//! Each subcommand reads its inputs from the on-disk formats, writes its
//! outputs into an existing directory and prints a short summary. Exit
//! codes: 0 success, 1 usage error, 2 data or schema error, 3 numeric
//! failure.

mod commands;
pub mod config;
mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<complexity_core::Error> for CliError {
    fn from(e: complexity_core::Error) -> Self {
        let code = match e {
            complexity_core::Error::Numeric(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "complexity",
    version,
    about = "Contact complexity scoring pipeline"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory the command writes into; it must exist.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also render SVG figures.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus.
    Generate {
        #[arg(long)]
        n_contacts: Option<usize>,
    },
    /// Fit the post-contact complexity scorer.
    TrainTeacher {
        /// Corpus directory holding transcripts.jsonl.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        weight: Option<f64>,
        /// Choose the weight from the configured grid.
        #[arg(long)]
        select_weight: bool,
    },
    /// Score transcripts with a fitted teacher.
    Score {
        /// Transcript file; defaults to the corpus transcripts.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Turn scores into binary high-complexity labels.
    Label {
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Fit the pre-contact classifier and its one-hot ablation.
    TrainStudent {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// `embedding` or `onehot`.
        #[arg(long)]
        encoding: Option<String>,
    },
    /// Predict high complexity from pre-contact records.
    Predict {
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Compare score distributions.
    Cauc {
        /// Score file of the benchmark population.
        #[arg(long)]
        benchmark: PathBuf,
        /// Score file of one target population.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Score file whose `group` column defines the target groups.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Emulate routing flagged contacts to stronger agents.
    Emulate {
        /// Keep the latent unchanged for the treatment arm.
        #[arg(long)]
        identity: bool,
        #[arg(long)]
        arm_size: Option<usize>,
        #[arg(long)]
        background: Option<usize>,
    },
    /// Binned label curve of scores against planted complexity.
    Report {
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        latents: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::usage(e.to_string().trim_end().to_string())),
    };
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    commands::dispatch(&cli, &config)
}
