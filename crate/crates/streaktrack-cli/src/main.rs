//! `streaktrack` — simulate annotated streak-debris videos, run the
//! endpoint-pair tracker on oracle or external-model inputs, evaluate
//! MOT metrics, check loss gradients, and render plots.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error.

mod commands;
mod font;
mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "streaktrack", version, about)]
pub struct Cli {
    /// Master seed, overriding the configured one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker thread cap (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML configuration file overlaying the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Sparse split: at most two streaks per frame.
    Debris,
    /// Crowded split: one to five streaks per frame.
    Dense,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackSource {
    /// Ground-truth-derived detections with configurable corruption.
    Oracle,
    /// Heatmap/embedding/offset tensor maps from an external model.
    Tensors,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimilarityArg {
    EndpointL1,
    BboxIou,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate an annotated dataset split.
    Simulate {
        /// Dataset root; the split is written to <out>/<split>.
        #[arg(long)]
        out: PathBuf,
        /// Split name (directory under the dataset root).
        #[arg(long, default_value = "test-debris")]
        split: String,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 1000)]
        num_sequences: usize,
    },
    /// Produce prediction CSVs for every sequence of a split.
    Track {
        /// Split directory produced by `simulate`.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "oracle")]
        source: TrackSource,
        /// Tensor-map root (required with --source tensors).
        #[arg(long)]
        tensors_dir: Option<PathBuf>,
        /// Output directory for per-sequence prediction CSVs.
        #[arg(long)]
        out: PathBuf,
        /// Oracle endpoint jitter std in pixels.
        #[arg(long)]
        jitter: Option<f64>,
        /// Oracle per-object drop probability.
        #[arg(long)]
        drop: Option<f64>,
        /// Oracle expected spurious detections per frame.
        #[arg(long)]
        false_positives: Option<f64>,
        /// Pair endpoints by optimal assignment instead of greedy.
        #[arg(long)]
        optimal_pairing: bool,
    },
    /// Score predictions against ground truth.
    Evaluate {
        /// Ground-truth split directory.
        #[arg(long)]
        gt: PathBuf,
        /// Prediction directory with <sequence>.csv files.
        #[arg(long)]
        pred: PathBuf,
        /// Report base path; writes <report>.json and <report>.txt.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        similarity: Option<SimilarityArg>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Validate analytic loss gradients against finite differences.
    CheckGradients {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Render overlays and intensity histograms, or a report chart.
    Plot {
        /// Split or single-sequence directory.
        #[arg(long, conflicts_with = "report")]
        dataset: Option<PathBuf>,
        /// Evaluation report JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Optional predictions to overlay in red.
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Cap on overlay frames per sequence (0 = all).
        #[arg(long, default_value_t = 0)]
        max_frames: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
