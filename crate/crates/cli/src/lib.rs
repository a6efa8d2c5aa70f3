//! The `raypet` command line: generate synthetic recordings, preprocess them
//! into window datasets, train and evaluate classifiers, compare the full
//! pipeline with its baseline and sweep window sizes.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigSources, RunConfig};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};
use crate::output::{log, say};

#[derive(Debug, Parser)]
#[command(name = "raypet", version, about = "Radar pet-activity pipeline on synthetic recordings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run config; compiled defaults fill anything it leaves out.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set pipeline.window_size=20`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true, env = "RAYPET_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize labeled clips, a background clip and a manifest.
    Gen {
        /// Output directory (default: `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the preprocessing pipeline over a manifest into a dataset file.
    Preprocess {
        /// Manifest written by `gen`.
        #[arg(long)]
        manifest: PathBuf,
        /// Background clip replacing the manifest's own.
        #[arg(long)]
        background: Option<PathBuf>,
        /// Stages to turn off: noise_removal, background_filter, static_clutter, dbscan, aggregation.
        #[arg(long, value_delimiter = ',')]
        disable: Vec<String>,
        /// Dataset path (default: `dataset.rpds` under `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the configured classifier on the training sessions of a dataset.
    Train {
        /// Dataset written by `preprocess`.
        #[arg(long)]
        dataset: PathBuf,
        /// Model checkpoint path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-epoch JSONL log path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a model on the held-out sessions of a dataset.
    Eval {
        /// Dataset written by `preprocess`.
        #[arg(long)]
        dataset: PathBuf,
        /// Checkpoint written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Report path (default: `eval.json` under `out_dir`); the confusion matrix goes next to it as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and score the full pipeline against windowing and voxelization alone.
    Compare {
        /// Manifest written by `gen`.
        #[arg(long)]
        manifest: PathBuf,
        /// Background clip replacing the manifest's own.
        #[arg(long)]
        background: Option<PathBuf>,
        /// Report path (default: `comparison.json` under `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and score one run per window/slide pair.
    Sweep {
        /// Manifest written by `gen`.
        #[arg(long)]
        manifest: PathBuf,
        /// Background clip replacing the manifest's own.
        #[arg(long)]
        background: Option<PathBuf>,
        /// Pairs as `W:SW,W:SW` (default: `sweep.pairs` from the config).
        #[arg(long)]
        pairs: Option<String>,
        /// Report path (default: `sweep.json` under `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print radar-derived quantities, clip and window counts and the config validation report.
    Inspect {
        /// Also report clip and window counts for this manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Also report sample counts and provenance of this dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::Preprocess { .. } => "preprocess",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Compare { .. } => "compare",
            Command::Sweep { .. } => "sweep",
            Command::Inspect { .. } => "inspect",
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Some(n) = g.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = RunConfig::load(&ConfigSources { file: g.config.as_deref(), overrides: &g.overrides, seed: g.seed })?;
    log("config", serde_json::json!({ "command": cli.command.name(), "config": cfg.to_json() }));
    say(&format!("raypet {} with resolved config:\n{}", cli.command.name(), cfg.to_toml()));
    if !matches!(cli.command, Command::Inspect { .. }) {
        cfg.validate()?;
    }
    match &cli.command {
        Command::Gen { out } => commands::gen(&cfg, out.as_deref()),
        Command::Preprocess { manifest, background, disable, out } => {
            commands::preprocess(&cfg, manifest, background.as_deref(), disable, out.as_deref())
        }
        Command::Train { dataset, out, log } => commands::train(&cfg, dataset, out.as_deref(), log.as_deref()),
        Command::Eval { dataset, model, out } => commands::eval(&cfg, dataset, model, out.as_deref()),
        Command::Compare { manifest, background, out } => {
            commands::compare(&cfg, manifest, background.as_deref(), out.as_deref())
        }
        Command::Sweep { manifest, background, pairs, out } => {
            commands::sweep(&cfg, manifest, background.as_deref(), pairs.as_deref(), out.as_deref())
        }
        Command::Inspect { manifest, dataset } => commands::inspect(&cfg, manifest.as_deref(), dataset.as_deref()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log("error", serde_json::json!({ "exit_code": e.exit_code(), "message": e.to_string() }));
            say(&format!("error: {e}"));
            e.exit_code()
        }
    }
}
