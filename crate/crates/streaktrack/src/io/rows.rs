//! CSV row schemas for ground truth and tracker predictions.
//!
//! Ground truth is a MOT-style CSV extended with streak endpoints and
//! state parameters; predictions carry the same endpoint/box columns
//! without the simulation-only fields. All floats are written in Rust's
//! shortest round-trip form so files are byte-deterministic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{
    bbox_from_state, endpoints_from_state, AnnotatedObject, DebrisState, Point,
    SequenceAnnotation, Track,
};
use crate::error::{Error, Result};

/// Endpoint/center/length agreement tolerance when validating rows.
pub const ROW_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtRow {
    pub frame: usize,
    pub track_id: u64,
    pub x_left: f64,
    pub y_left: f64,
    pub x_right: f64,
    pub y_right: f64,
    pub cx: f64,
    pub cy: f64,
    pub length: f64,
    pub width: f64,
    pub angle_rad: f64,
    pub speed: f64,
    pub bb_x: f64,
    pub bb_y: f64,
    pub bb_w: f64,
    pub bb_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredRow {
    pub frame: usize,
    pub track_id: u64,
    pub x_left: f64,
    pub y_left: f64,
    pub x_right: f64,
    pub y_right: f64,
    pub bb_x: f64,
    pub bb_y: f64,
    pub bb_w: f64,
    pub bb_h: f64,
    pub score: f64,
}

pub fn gt_rows_from_annotation(ann: &SequenceAnnotation) -> Vec<GtRow> {
    let mut rows = Vec::with_capacity(ann.total_objects());
    for (t, objects) in ann.frames.iter().enumerate() {
        for o in objects {
            rows.push(GtRow {
                frame: t + 1,
                track_id: o.track_id,
                x_left: o.endpoints.left.x,
                y_left: o.endpoints.left.y,
                x_right: o.endpoints.right.x,
                y_right: o.endpoints.right.y,
                cx: o.state.center.x,
                cy: o.state.center.y,
                length: o.state.length,
                width: o.state.width,
                angle_rad: o.state.angle,
                speed: o.state.speed,
                bb_x: o.bbox.x_min,
                bb_y: o.bbox.y_min,
                bb_w: o.bbox.width(),
                bb_h: o.bbox.height(),
            });
        }
    }
    rows
}

/// Rebuild the per-frame annotation from validated rows.
pub fn annotation_from_rows(
    rows: &[GtRow],
    frame_count: usize,
    path: &Path,
) -> Result<SequenceAnnotation> {
    let mut frames: Vec<Vec<AnnotatedObject>> = vec![Vec::new(); frame_count.max(1)];
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        let describe = |reason: String| {
            Error::format(
                path,
                format!("frame {} track {}: {}", row.frame, row.track_id, reason),
            )
        };
        if row.frame == 0 || row.frame > frame_count {
            return Err(describe(format!(
                "frame out of range 1..={frame_count}"
            )));
        }
        if !seen.insert((row.frame, row.track_id)) {
            return Err(describe("duplicate (frame, track_id) row".into()));
        }
        let state = DebrisState::new(
            Point::new(row.cx, row.cy),
            row.length,
            row.width,
            row.angle_rad,
            row.speed,
        )
        .map_err(|e| describe(e.to_string()))?;
        let endpoints = endpoints_from_state(&state);
        let mid = Point::new(
            (row.x_left + row.x_right) / 2.0,
            (row.y_left + row.y_right) / 2.0,
        );
        if (mid.x - row.cx).abs() > ROW_CONSISTENCY_TOL
            || (mid.y - row.cy).abs() > ROW_CONSISTENCY_TOL
        {
            return Err(describe(format!(
                "endpoint midpoint ({}, {}) disagrees with center ({}, {})",
                mid.x, mid.y, row.cx, row.cy
            )));
        }
        let dist = Point::new(row.x_left, row.y_left).dist(Point::new(row.x_right, row.y_right));
        if (dist - row.length).abs() > ROW_CONSISTENCY_TOL {
            return Err(describe(format!(
                "endpoint distance {} disagrees with length {}",
                dist, row.length
            )));
        }
        frames[row.frame - 1].push(AnnotatedObject {
            track_id: row.track_id,
            endpoints,
            bbox: bbox_from_state(&state),
            state,
        });
    }
    SequenceAnnotation::new(frames)
}

pub fn pred_rows_from_tracks(tracks: &[Track]) -> Vec<PredRow> {
    let mut rows = Vec::new();
    for track in tracks {
        for (frame, det) in &track.entries {
            let e = det.endpoints;
            let (x0, x1) = (e.left.x.min(e.right.x), e.left.x.max(e.right.x));
            let (y0, y1) = (e.left.y.min(e.right.y), e.left.y.max(e.right.y));
            rows.push(PredRow {
                frame: *frame,
                track_id: track.id,
                x_left: e.left.x,
                y_left: e.left.y,
                x_right: e.right.x,
                y_right: e.right.y,
                bb_x: x0,
                bb_y: y0,
                bb_w: x1 - x0,
                bb_h: y1 - y0,
                score: det.score,
            });
        }
    }
    rows.sort_by(|a, b| (a.frame, a.track_id).cmp(&(b.frame, b.track_id)));
    rows
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(|e| csv_error(path, e))?);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e.to_string())
    }
}
