//! Subcommand implementations.

use std::fmt;
use std::path::{Path, PathBuf};

use streaktrack::dataset::generate_split;
use streaktrack::decode::{
    extract_peaks, oracle_detect, pair_endpoints, pair_endpoints_optimal, Peak,
};
use streaktrack::domain::{Detection, Point};
use streaktrack::error::Error as CoreError;
use streaktrack::grid::Grid2D;
use streaktrack::io::{
    list_sequence_dirs, read_annotation, read_tensor_map, write_predictions,
    ToolConfig,
};
use streaktrack::losses::gradcheck;
use streaktrack::metrics::{evaluate_dirs, render_table, SimilarityKind};
use streaktrack::sim::{sequence_rng, SimConfig};
use streaktrack::tracker::run_sequence;

use crate::{Cli, Command, Preset, SimilarityArg, TrackSource};

/// CLI failure classified for the exit code contract.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let mut msg = e.to_string();
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            msg.push_str(&format!(": {s}"));
            source = s.source();
        }
        if e.is_validation() {
            CliError::Validation(msg)
        } else {
            CliError::Io(msg)
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        // Ignore the error if a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match &cli.command {
        Command::Simulate {
            out,
            split,
            preset,
            num_sequences,
        } => {
            let cfg = resolve_config(&cli, *preset)?;
            simulate(&cfg.sim, out, split, *num_sequences, cli.threads != Some(1))
        }
        Command::Track {
            dataset,
            source,
            tensors_dir,
            out,
            jitter,
            drop,
            false_positives,
            optimal_pairing,
        } => {
            let mut cfg = resolve_config(&cli, None)?;
            if let Some(v) = jitter {
                cfg.oracle.endpoint_jitter_std = *v;
            }
            if let Some(v) = drop {
                cfg.oracle.drop_prob = *v;
            }
            if let Some(v) = false_positives {
                cfg.oracle.false_positive_rate = *v;
            }
            cfg.oracle.validate()?;
            let seed = cli.seed.unwrap_or(cfg.sim.rng_seed);
            track(
                &cfg,
                dataset,
                *source,
                tensors_dir.as_deref(),
                out,
                seed,
                *optimal_pairing,
            )
        }
        Command::Evaluate {
            gt,
            pred,
            report,
            similarity,
            threshold,
        } => {
            let mut cfg = resolve_config(&cli, None)?;
            if let Some(s) = similarity {
                cfg.matching.similarity = match s {
                    SimilarityArg::EndpointL1 => SimilarityKind::EndpointL1,
                    SimilarityArg::BboxIou => SimilarityKind::BboxIou,
                };
            }
            if let Some(t) = threshold {
                cfg.matching.match_threshold = *t;
            }
            cfg.matching.validate()?;
            evaluate(&cfg, gt, pred, report)
        }
        Command::CheckGradients { trials } => check_gradients(*trials, cli.seed.unwrap_or(0)),
        Command::Plot {
            dataset,
            report,
            pred,
            out,
            max_frames,
        } => match (dataset, report) {
            (Some(dataset), None) => {
                crate::plot::plot_dataset(dataset, pred.as_deref(), out, *max_frames)
            }
            (None, Some(report)) => crate::plot::plot_report(report, out),
            _ => Err(CliError::validation(
                "plot requires exactly one of --dataset or --report",
            )),
        },
    }
}

/// Defaults -> preset -> config file -> --seed flag, in that order.
fn resolve_config(cli: &Cli, preset: Option<Preset>) -> Result<ToolConfig, CliError> {
    let mut base = ToolConfig::default();
    if let Some(preset) = preset {
        base.sim = match preset {
            Preset::Debris => SimConfig::debris_preset(),
            Preset::Dense => SimConfig::dense_preset(),
        };
    }
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            streaktrack::io::parse_config(&text, base, path)?
        }
        None => base,
    };
    if let Some(seed) = cli.seed {
        cfg.sim.rng_seed = seed;
    }
    Ok(cfg)
}

fn simulate(
    sim: &SimConfig,
    out: &Path,
    split: &str,
    num_sequences: usize,
    parallel: bool,
) -> Result<(), CliError> {
    sim.validate()?;
    if num_sequences == 0 {
        return Err(CliError::validation("--num-sequences must be at least 1"));
    }
    let split_dir = out.join(split);
    if split_dir.exists() {
        return Err(CliError::validation(format!(
            "refusing to overwrite existing split {}",
            split_dir.display()
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    // Build under a temp name and rename so failures leave no partial split.
    let tmp = out.join(format!(".tmp-{split}-{}", std::process::id()));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    }
    let result = generate_split(sim, num_sequences, &tmp, parallel);
    match result {
        Ok(summary) => {
            std::fs::rename(&tmp, &split_dir).map_err(|e| io_err(&split_dir, e))?;
            println!(
                "wrote split {} ({} sequences, {} frames, {} annotated streaks)",
                split_dir.display(),
                summary.sequences,
                summary.frames,
                summary.objects
            );
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_dir_all(&tmp);
            Err(e.into())
        }
    }
}

fn track(
    cfg: &ToolConfig,
    dataset: &Path,
    source: TrackSource,
    tensors_dir: Option<&Path>,
    out: &Path,
    seed: u64,
    optimal_pairing: bool,
) -> Result<(), CliError> {
    let sequences = list_sequence_dirs(dataset)?;
    if sequences.is_empty() {
        return Err(CliError::validation(format!(
            "no sequences found under {}",
            dataset.display()
        )));
    }
    if source == TrackSource::Tensors && tensors_dir.is_none() {
        return Err(CliError::validation(
            "--source tensors requires --tensors-dir",
        ));
    }

    let parent = out.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    let tmp = parent.join(format!(
        ".tmp-{}-{}",
        out.file_name().and_then(|n| n.to_str()).unwrap_or("pred"),
        std::process::id()
    ));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    }
    std::fs::create_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;

    let run = || -> Result<(), CliError> {
        let mut warned_offsets = false;
        for (ordinal, (name, dir)) in sequences.iter().enumerate() {
            let (ann, meta) = read_annotation(dir)?;
            let frames_detections = match source {
                TrackSource::Oracle => {
                    let mut rng = sequence_rng(seed, ordinal as u64);
                    let mut frames = Vec::with_capacity(ann.frame_count());
                    for t in 1..=ann.frame_count() {
                        frames.push(oracle_detect(
                            ann.objects(t),
                            &cfg.oracle,
                            true,
                            meta.image_size,
                            &mut rng,
                        )?);
                    }
                    frames
                }
                TrackSource::Tensors => decode_tensor_frames(
                    cfg,
                    tensors_dir.unwrap(),
                    name,
                    ann.frame_count(),
                    optimal_pairing,
                    &mut warned_offsets,
                )?,
            };
            let tracks = run_sequence(&frames_detections, &cfg.tracker)?;
            write_predictions(&tracks, &tmp.join(format!("{name}.csv")))?;
        }
        Ok(())
    };

    match run() {
        Ok(()) => {
            if out.exists() {
                let _ = std::fs::remove_dir_all(&tmp);
                return Err(CliError::validation(format!(
                    "refusing to overwrite existing prediction dir {}",
                    out.display()
                )));
            }
            std::fs::rename(&tmp, out).map_err(|e| io_err(out, e))?;
            println!(
                "wrote predictions for {} sequences to {}",
                sequences.len(),
                out.display()
            );
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

fn tensor_path(root: &Path, seq: &str, frame: usize, kind: &str) -> PathBuf {
    root.join(seq).join(format!("{frame:06}.{kind}.tmap"))
}

fn read_required_map(
    root: &Path,
    seq: &str,
    frame: usize,
    kind: &str,
) -> Result<Grid2D, CliError> {
    let path = tensor_path(root, seq, frame, kind);
    if !path.is_file() {
        return Err(CliError::Io(format!(
            "missing {kind} tensor map for sequence {seq} frame {frame}: {}",
            path.display()
        )));
    }
    Ok(read_tensor_map(&path)?)
}

fn sample_offset(map: &Grid2D, p: Point) -> Point {
    let x = (p.x.round() as isize).clamp(0, map.width() as isize - 1) as usize;
    let y = (p.y.round() as isize).clamp(0, map.height() as isize - 1) as usize;
    Point::new(map.get(x, y, 0), map.get(x, y, 1))
}

fn decode_tensor_frames(
    cfg: &ToolConfig,
    tensors: &Path,
    seq: &str,
    frame_count: usize,
    optimal_pairing: bool,
    warned_offsets: &mut bool,
) -> Result<Vec<Vec<Detection>>, CliError> {
    let mut out = Vec::with_capacity(frame_count);
    for frame in 1..=frame_count {
        let heatmap = read_required_map(tensors, seq, frame, "heatmap")?;
        let (left, right): (Vec<Peak>, Vec<Peak>) = extract_peaks(&heatmap, &cfg.heatmap)?;
        let emb_left = read_required_map(tensors, seq, frame, "emb_left")?;
        let emb_right = read_required_map(tensors, seq, frame, "emb_right")?;
        let gate = cfg.heatmap.embedding_gate;
        let mut detections = if optimal_pairing {
            pair_endpoints_optimal(&left, &right, &emb_left, &emb_right, gate)?
        } else {
            pair_endpoints(&left, &right, &emb_left, &emb_right, gate)?
        };

        let off_left_path = tensor_path(tensors, seq, frame, "offset_left");
        let off_right_path = tensor_path(tensors, seq, frame, "offset_right");
        if off_left_path.is_file() && off_right_path.is_file() {
            let off_left = read_tensor_map(&off_left_path)?;
            let off_right = read_tensor_map(&off_right_path)?;
            if off_left.channels() != 2 || off_right.channels() != 2 {
                return Err(CliError::Validation(format!(
                    "offset maps for sequence {seq} frame {frame} must have 2 channels"
                )));
            }
            for det in &mut detections {
                det.offset_left = Some(sample_offset(&off_left, det.endpoints.left));
                det.offset_right = Some(sample_offset(&off_right, det.endpoints.right));
            }
        } else {
            if !*warned_offsets {
                eprintln!(
                    "warning: no offset maps found; association falls back to zero offsets"
                );
                *warned_offsets = true;
            }
            for det in &mut detections {
                det.offset_left = Some(Point::new(0.0, 0.0));
                det.offset_right = Some(Point::new(0.0, 0.0));
            }
        }
        out.push(detections);
    }
    Ok(out)
}

fn evaluate(cfg: &ToolConfig, gt: &Path, pred: &Path, report: &Path) -> Result<(), CliError> {
    let result = evaluate_dirs(gt, pred, &cfg.matching)?;
    let table = render_table(&result);
    print!("{table}");

    if let Some(parent) = report.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    let json_path = report.with_extension("json");
    let json = serde_json::to_string_pretty(&result)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    std::fs::write(&json_path, json).map_err(|e| io_err(&json_path, e))?;
    let txt_path = report.with_extension("txt");
    std::fs::write(&txt_path, table).map_err(|e| io_err(&txt_path, e))?;
    println!("wrote {} and {}", json_path.display(), txt_path.display());
    Ok(())
}

fn check_gradients(trials: usize, seed: u64) -> Result<(), CliError> {
    let reports = gradcheck::run_suite(trials, seed);
    let mut all_passed = true;
    for r in &reports {
        println!(
            "{} {:<14} max rel err {:.3e} over {} trials",
            if r.passed { "PASS" } else { "FAIL" },
            r.loss_name,
            r.max_rel_err,
            r.trials
        );
        all_passed &= r.passed;
    }
    if all_passed {
        println!("all gradient checks passed");
        Ok(())
    } else {
        Err(CliError::validation("gradient checks failed"))
    }
}
