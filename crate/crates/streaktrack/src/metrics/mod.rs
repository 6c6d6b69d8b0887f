//! Multi-object-tracking evaluation: CLEAR (MOTA/IDS), identity F1, and
//! HOTA with its DetA/AssA decomposition, plus report assembly.
//!
//! The primary similarity for streaks is the summed endpoint L1
//! distance, mapped to [0, 1]; axis-aligned IoU is retained as an
//! alternative for box-style comparisons.

mod clear;
mod hota;
mod idf1;

pub use clear::{clear_accumulate, frame_match, mota, ClearCounts, FrameMatch};
pub use hota::{hota_accumulate, hota_scores, AlphaScore, HotaAccum, HotaScores};
pub use idf1::{idf1, idf1_counts, IdCounts};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Bbox, EndpointPair, SequenceAnnotation, Track};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    /// Summed L1 distance over both endpoints, mapped to
    /// 1 − d / match_threshold and clamped at 0.
    EndpointL1,
    /// Axis-aligned intersection-over-union of the bounding boxes.
    BboxIou,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub similarity: SimilarityKind,
    /// Endpoint mode: maximum L1 distance (pixels). IoU mode: minimum
    /// IoU. Both interpret "a match" as similarity at or above cutoff.
    pub match_threshold: f64,
    /// Localization thresholds averaged by HOTA.
    pub hota_alphas: Vec<f64>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            similarity: SimilarityKind::EndpointL1,
            match_threshold: 10.0,
            hota_alphas: (1..=19).map(|i| i as f64 * 0.05).collect(),
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.match_threshold > 0.0) {
            return Err(Error::invalid("MatchConfig", "match_threshold must be > 0"));
        }
        if self.hota_alphas.is_empty()
            || self.hota_alphas.iter().any(|a| !(0.0 < *a && *a < 1.0))
        {
            return Err(Error::invalid(
                "MatchConfig",
                "hota_alphas must be non-empty and within (0, 1)",
            ));
        }
        Ok(())
    }

    /// Similarity in [0, 1] regardless of the match cutoff.
    pub fn similarity(&self, a: &FrameObject, b: &FrameObject) -> f64 {
        match self.similarity {
            SimilarityKind::EndpointL1 => {
                let d = a.endpoints.left.l1_dist(b.endpoints.left)
                    + a.endpoints.right.l1_dist(b.endpoints.right);
                (1.0 - d / self.match_threshold).max(0.0)
            }
            SimilarityKind::BboxIou => a.bbox.iou(&b.bbox),
        }
    }

    /// Similarity if the pair qualifies as a match, else None.
    pub fn match_score(&self, a: &FrameObject, b: &FrameObject) -> Option<f64> {
        match self.similarity {
            SimilarityKind::EndpointL1 => {
                let d = a.endpoints.left.l1_dist(b.endpoints.left)
                    + a.endpoints.right.l1_dist(b.endpoints.right);
                (d <= self.match_threshold).then(|| (1.0 - d / self.match_threshold).max(0.0))
            }
            SimilarityKind::BboxIou => {
                let iou = a.bbox.iou(&b.bbox);
                (iou >= self.match_threshold).then_some(iou)
            }
        }
    }
}

/// One identity-stamped object in one frame, as seen by the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObject {
    pub id: u64,
    pub endpoints: EndpointPair,
    pub bbox: Bbox,
}

/// Per-frame object lists for one sequence (index 0 = frame 1).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    pub frames: Vec<Vec<FrameObject>>,
}

impl TrackSet {
    pub fn from_annotation(ann: &SequenceAnnotation) -> Self {
        TrackSet {
            frames: ann
                .frames
                .iter()
                .map(|objs| {
                    objs.iter()
                        .map(|o| FrameObject {
                            id: o.track_id,
                            endpoints: o.endpoints,
                            bbox: o.bbox,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Lay tracks out over `frame_count` frames (1-based entries beyond
    /// the count extend the set).
    pub fn from_tracks(tracks: &[Track], frame_count: usize) -> Self {
        let max_frame = tracks
            .iter()
            .flat_map(|t| t.entries.iter().map(|(f, _)| *f))
            .max()
            .unwrap_or(0);
        let mut frames = vec![Vec::new(); frame_count.max(max_frame)];
        for track in tracks {
            for (frame, det) in &track.entries {
                let e = det.endpoints;
                frames[frame - 1].push(FrameObject {
                    id: track.id,
                    endpoints: e,
                    bbox: Bbox::new(
                        e.left.x.min(e.right.x),
                        e.left.y.min(e.right.y),
                        e.left.x.max(e.right.x),
                        e.left.y.max(e.right.y),
                    ),
                });
            }
        }
        TrackSet { frames }
    }

    pub fn total_objects(&self) -> usize {
        self.frames.iter().map(|f| f.len()).sum()
    }
}

/// Scores for one sequence or an aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub mota: f64,
    pub idf1: f64,
    pub id_switches: usize,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub gt_total: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_sequence: BTreeMap<String, Scores>,
    pub aggregate: Scores,
}

struct SequenceAccum {
    clear: ClearCounts,
    ids: IdCounts,
    hota: HotaAccum,
}

fn accumulate(gt: &TrackSet, pred: &TrackSet, cfg: &MatchConfig) -> SequenceAccum {
    SequenceAccum {
        clear: clear_accumulate(gt, pred, cfg),
        ids: idf1_counts(gt, pred, cfg),
        hota: hota_accumulate(gt, pred, cfg),
    }
}

fn scores_of(acc: &SequenceAccum) -> Scores {
    let hota = hota_scores(&acc.hota);
    Scores {
        mota: mota(&acc.clear),
        idf1: idf1(&acc.ids),
        id_switches: acc.clear.id_switches,
        hota: hota.hota,
        deta: hota.deta,
        assa: hota.assa,
        gt_total: acc.clear.gt_total,
        true_positives: acc.clear.true_positives,
        false_positives: acc.clear.false_positives,
        false_negatives: acc.clear.false_negatives,
    }
}

/// Evaluate named (ground-truth, prediction) track-set pairs and build
/// the report with a micro-averaged aggregate (pooled counts, equal to
/// evaluating the concatenation of all sequences).
pub fn evaluate_sets(
    sequences: &[(String, TrackSet, TrackSet)],
    cfg: &MatchConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    let mut per_sequence = BTreeMap::new();
    let mut pooled: Option<SequenceAccum> = None;
    for (name, gt, pred) in sequences {
        let acc = accumulate(gt, pred, cfg);
        per_sequence.insert(name.clone(), scores_of(&acc));
        match pooled.as_mut() {
            None => pooled = Some(acc),
            Some(p) => {
                p.clear.merge(&acc.clear);
                p.ids.merge(&acc.ids);
                p.hota.merge(&acc.hota);
            }
        }
    }
    let aggregate = match pooled.as_ref() {
        Some(acc) => scores_of(acc),
        None => {
            let empty = accumulate(&TrackSet::default(), &TrackSet::default(), cfg);
            scores_of(&empty)
        }
    };
    Ok(EvalReport {
        per_sequence,
        aggregate,
    })
}

/// Evaluate a dataset split directory against a prediction directory
/// holding one `<sequence_id>.csv` per sequence.
pub fn evaluate_dirs(gt_root: &Path, pred_dir: &Path, cfg: &MatchConfig) -> Result<EvalReport> {
    let sequences = crate::io::list_sequence_dirs(gt_root)?;
    if sequences.is_empty() {
        return Err(Error::format(gt_root, "no sequence directories found"));
    }
    let missing: Vec<String> = sequences
        .iter()
        .filter(|(name, _)| !pred_dir.join(format!("{name}.csv")).is_file())
        .map(|(name, _)| name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSequences(missing));
    }

    let mut sets = Vec::with_capacity(sequences.len());
    for (name, dir) in &sequences {
        let (ann, _meta) = crate::io::read_annotation(dir)?;
        let gt = TrackSet::from_annotation(&ann);
        let pred_rows = crate::io::read_predictions(&pred_dir.join(format!("{name}.csv")))?;
        let pred = crate::io::track_set_from_pred_rows(&pred_rows, ann.frame_count());
        sets.push((name.clone(), gt, pred));
    }
    evaluate_sets(&sets, cfg)
}

fn fmt_pct(v: f64) -> String {
    if v.is_nan() {
        "  n/a".to_string()
    } else {
        format!("{:5.1}", v * 100.0)
    }
}

/// Plain-text table of the report, one row per sequence plus the
/// aggregate, columns IDF1 / MOTA / IDS / HOTA / DetA / AssA.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
        "sequence", "IDF1", "MOTA", "IDS", "HOTA", "DetA", "AssA"
    ));
    for (name, s) in &report.per_sequence {
        out.push_str(&format!(
            "{:<16} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
            name,
            fmt_pct(s.idf1),
            fmt_pct(s.mota),
            s.id_switches,
            fmt_pct(s.hota),
            fmt_pct(s.deta),
            fmt_pct(s.assa),
        ));
    }
    let s = &report.aggregate;
    out.push_str(&format!(
        "{:<16} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
        "OVERALL",
        fmt_pct(s.idf1),
        fmt_pct(s.mota),
        s.id_switches,
        fmt_pct(s.hota),
        fmt_pct(s.deta),
        fmt_pct(s.assa),
    ));
    out
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::domain::Point;

    /// Build a frame object from a point-like streak at (x, y).
    pub fn obj(id: u64, x: f64, y: f64) -> FrameObject {
        let e = EndpointPair::raw(Point::new(x, y), Point::new(x + 4.0, y));
        FrameObject {
            id,
            endpoints: e,
            bbox: Bbox::new(x, y - 1.0, x + 4.0, y + 1.0),
        }
    }

    pub fn track_set(frames: Vec<Vec<FrameObject>>) -> TrackSet {
        TrackSet { frames }
    }
}
