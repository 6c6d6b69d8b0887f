//! On-disk dataset formats (see docs/FORMATS.md for the byte-exact
//! contracts):
//!
//! ```text
//! <root>/<split>/<seq_id>/frames/%06d.png   8-bit grayscale frames, 1-based
//!                         gt.csv            ground-truth rows
//!                         masks/%06d.png    optional binary masks
//!                         meta.json         full SimConfig + seed provenance
//! ```
//!
//! Writers are deterministic: identical inputs produce byte-identical
//! trees. Readers validate structure and reject malformed inputs with
//! structured errors, never panics.

mod config;
mod rows;
mod tensor;

pub use config::{load_config, parse_config, ToolConfig};
pub use rows::{
    annotation_from_rows, gt_rows_from_annotation, pred_rows_from_tracks, read_csv, write_csv,
    GtRow, PredRow, ROW_CONSISTENCY_TOL,
};
pub use tensor::{read_tensor_map, write_tensor_map, TENSOR_DTYPE_F32, TENSOR_MAGIC, TENSOR_VERSION};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{SequenceAnnotation, Track};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::metrics::TrackSet;
use crate::sim::SimConfig;

pub const FRAMES_DIR: &str = "frames";
pub const MASKS_DIR: &str = "masks";
pub const GT_FILE: &str = "gt.csv";
pub const META_FILE: &str = "meta.json";

/// 1-based frame file name: `000001.png`, `000002.png`, ...
pub fn frame_file_name(index: usize) -> String {
    format!("{index:06}.png")
}

/// `<root>/<seq_id>` directory name for a 1-based sequence index.
pub fn sequence_dir_name(index: u64) -> String {
    format!("{index:06}")
}

/// Provenance record stored as `meta.json` in each sequence directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub sequence_index: u64,
    pub frame_count: usize,
    pub image_size: (usize, usize),
    /// Full simulation configuration including the master seed.
    pub config: SimConfig,
}

fn write_gray_png(grid: &Grid2D, path: &Path) -> Result<()> {
    let (w, h) = (grid.width(), grid.height());
    let mut img = image::GrayImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let v = grid.get(x, y, 0).clamp(0.0, 255.0).round() as u8;
            img.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_gray_png(path: &Path) -> Result<Grid2D> {
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut grid = Grid2D::new(w, h, 1);
    for y in 0..h {
        for x in 0..w {
            grid.set(x, y, 0, img.get_pixel(x as u32, y as u32)[0] as f64);
        }
    }
    Ok(grid)
}

/// Write one sequence (frames + annotation + provenance) into `dir`.
pub fn write_sequence(
    frames: &[Grid2D],
    ann: &SequenceAnnotation,
    meta: &SequenceMeta,
    dir: &Path,
) -> Result<()> {
    if frames.len() != ann.frame_count() {
        return Err(Error::DimMismatch(format!(
            "{} frames but annotation covers {}",
            frames.len(),
            ann.frame_count()
        )));
    }
    if let Some(masks) = &ann.masks {
        if masks.len() != frames.len() {
            return Err(Error::DimMismatch("mask count differs from frames".into()));
        }
    }
    let frames_dir = dir.join(FRAMES_DIR);
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        write_gray_png(frame, &frames_dir.join(frame_file_name(i + 1)))?;
    }
    if let Some(masks) = &ann.masks {
        let masks_dir = dir.join(MASKS_DIR);
        std::fs::create_dir_all(&masks_dir).map_err(|e| Error::io(&masks_dir, e))?;
        for (i, mask) in masks.iter().enumerate() {
            let mut scaled = mask.clone();
            scaled.map_inplace(|v| if v > 0.0 { 255.0 } else { 0.0 });
            write_gray_png(&scaled, &masks_dir.join(frame_file_name(i + 1)))?;
        }
    }
    write_csv(&gt_rows_from_annotation(ann), &dir.join(GT_FILE))?;

    let meta_path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::format(&meta_path, e.to_string()))?;
    std::fs::write(&meta_path, json.as_bytes()).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

/// Read annotation and provenance without loading frames.
pub fn read_annotation(dir: &Path) -> Result<(SequenceAnnotation, SequenceMeta)> {
    let meta_path = dir.join(META_FILE);
    let meta_bytes = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SequenceMeta = serde_json::from_slice(&meta_bytes)
        .map_err(|e| Error::format(&meta_path, e.to_string()))?;
    let gt_path = dir.join(GT_FILE);
    let rows: Vec<GtRow> = read_csv(&gt_path)?;
    let mut ann = annotation_from_rows(&rows, meta.frame_count, &gt_path)?;

    let masks_dir = dir.join(MASKS_DIR);
    if masks_dir.is_dir() {
        let mut masks = Vec::with_capacity(meta.frame_count);
        for i in 1..=meta.frame_count {
            let mut mask = read_gray_png(&masks_dir.join(frame_file_name(i)))?;
            mask.map_inplace(|v| if v > 0.0 { 1.0 } else { 0.0 });
            masks.push(mask);
        }
        ann.masks = Some(masks);
    }
    Ok((ann, meta))
}

/// Read a full sequence: frames, annotation, and provenance.
pub fn read_sequence(dir: &Path) -> Result<(Vec<Grid2D>, SequenceAnnotation, SequenceMeta)> {
    let (ann, meta) = read_annotation(dir)?;
    let mut frames = Vec::with_capacity(meta.frame_count);
    for i in 1..=meta.frame_count {
        frames.push(read_gray_png(&dir.join(FRAMES_DIR).join(frame_file_name(i)))?);
    }
    Ok((frames, ann, meta))
}

/// Sequence directories under a split root, sorted by name.
pub fn list_sequence_dirs(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() && path.join(META_FILE).is_file() {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Write tracker output as a MOT-style prediction CSV.
pub fn write_predictions(tracks: &[Track], path: &Path) -> Result<()> {
    write_csv(&pred_rows_from_tracks(tracks), path)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredRow>> {
    read_csv(path)
}

/// Lay prediction rows out per frame for evaluation.
pub fn track_set_from_pred_rows(rows: &[PredRow], frame_count: usize) -> TrackSet {
    use crate::domain::{Bbox, EndpointPair, Point};
    use crate::metrics::FrameObject;
    let max_frame = rows.iter().map(|r| r.frame).max().unwrap_or(0);
    let mut frames = vec![Vec::new(); frame_count.max(max_frame)];
    for r in rows {
        if r.frame == 0 {
            continue;
        }
        frames[r.frame - 1].push(FrameObject {
            id: r.track_id,
            endpoints: EndpointPair::raw(
                Point::new(r.x_left, r.y_left),
                Point::new(r.x_right, r.y_right),
            ),
            bbox: Bbox::new(r.bb_x, r.bb_y, r.bb_x + r.bb_w, r.bb_y + r.bb_h),
        });
    }
    TrackSet { frames }
}
