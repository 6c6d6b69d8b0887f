//! Cross-frame association through predicted endpoint offsets, track
//! lifecycle management, and trajectory output.
//!
//! Each detection carries per-endpoint offsets predicting where its
//! endpoints were in the previous frame; association measures the L1
//! consistency between those derived locations and the previous frame's
//! detections, greedily matching nearest neighbors inside a radius gate.

use serde::{Deserialize, Serialize};

use crate::assign::{greedy_min_matching, min_cost_matching_gated};
use crate::domain::{Detection, EndpointPair, Point, Track};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Association radius on the summed endpoint L1 distance, pixels.
    pub association_radius: f64,
    /// Number of consecutive undetected frames a track may coast.
    pub max_missed_frames: u32,
    /// Tracks shorter than this are dropped from the output.
    pub min_track_length: usize,
    /// Use optimal assignment instead of greedy nearest-neighbor.
    pub optimal_assignment: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            association_radius: 200.0,
            max_missed_frames: 1,
            min_track_length: 1,
            optimal_assignment: false,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.association_radius > 0.0) {
            return Err(Error::invalid(
                "TrackerConfig",
                "association_radius must be > 0",
            ));
        }
        Ok(())
    }
}

/// Where the detection's endpoints were one frame earlier, per its
/// predicted offsets: c' = c − o for each endpoint independently.
pub fn derive_previous_endpoints(det: &Detection) -> Result<EndpointPair> {
    let (ol, or) = match (det.offset_left, det.offset_right) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::MissingOffsets),
    };
    Ok(EndpointPair::raw(
        det.endpoints.left.sub(ol),
        det.endpoints.right.sub(or),
    ))
}

/// Location-consistency matrix: entry (i, j) is the L1 distance between
/// detection i's derived previous endpoints and detection j's endpoints,
/// summed over left and right.
pub fn object_similarity(curr: &[Detection], prev: &[Detection]) -> Result<Vec<Vec<f64>>> {
    curr.iter()
        .map(|c| {
            let derived = derive_previous_endpoints(c)?;
            Ok(prev
                .iter()
                .map(|p| {
                    derived.left.l1_dist(p.endpoints.left)
                        + derived.right.l1_dist(p.endpoints.right)
                })
                .collect())
        })
        .collect()
}

/// Outcome of associating one current detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Association {
    /// Index into the previous-frame detection list.
    Matched(usize),
    Birth,
}

/// Associate current detections with previous-frame detections: greedy
/// nearest-neighbor on ascending similarity, each previous detection
/// used at most once, pairs beyond the radius gate becoming births.
/// When two current detections contend for the same previous detection,
/// the closer one wins and the other becomes a birth.
pub fn associate(
    curr: &[Detection],
    prev: &[Detection],
    cfg: &TrackerConfig,
) -> Result<Vec<Association>> {
    cfg.validate()?;
    let mut out = vec![Association::Birth; curr.len()];
    if curr.is_empty() || prev.is_empty() {
        return Ok(out);
    }
    let similarity = object_similarity(curr, prev)?;
    let pairs = if cfg.optimal_assignment {
        min_cost_matching_gated(&similarity, cfg.association_radius)
    } else {
        greedy_min_matching(&similarity, cfg.association_radius)
    };
    for (i, j) in pairs {
        out[i] = Association::Matched(j);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct ActiveTrack {
    id: u64,
    entries: Vec<(usize, Detection)>,
    last_frame: usize,
    last_detection: Detection,
}

impl ActiveTrack {
    /// Predicted endpoints at `frame` assuming the last offsets repeat
    /// each missed frame (used for gating only, never emitted).
    fn predicted_endpoints(&self, frame: usize) -> EndpointPair {
        let steps = (frame - self.last_frame) as f64;
        let zero = Point::new(0.0, 0.0);
        let ol = self.last_detection.offset_left.unwrap_or(zero).scale(steps);
        let or = self
            .last_detection
            .offset_right
            .unwrap_or(zero)
            .scale(steps);
        EndpointPair::raw(
            self.last_detection.endpoints.left.add(ol),
            self.last_detection.endpoints.right.add(or),
        )
    }
}

/// Mutable tracker state across frames of one sequence. Ids are never
/// reused within a sequence.
#[derive(Debug, Clone, Default)]
pub struct TrackerState {
    next_id: u64,
    last_frame: Option<usize>,
    active: Vec<ActiveTrack>,
    closed: Vec<Track>,
}

/// How one detection was resolved in a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepAssignment {
    pub detection_index: usize,
    pub track_id: u64,
    pub is_birth: bool,
}

impl TrackerState {
    pub fn new() -> Self {
        TrackerState {
            next_id: 1,
            last_frame: None,
            active: Vec::new(),
            closed: Vec::new(),
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Advance by one frame: match detections to active tracks, extend
    /// matched tracks, open new tracks for unmatched detections, and
    /// close tracks missed for more than `max_missed_frames`.
    pub fn step(
        &mut self,
        frame_idx: usize,
        detections: &[Detection],
        cfg: &TrackerConfig,
    ) -> Result<Vec<StepAssignment>> {
        if let Some(prev) = self.last_frame {
            if frame_idx <= prev {
                return Err(Error::NonMonotonicFrame {
                    prev,
                    got: frame_idx,
                });
            }
        }
        self.last_frame = Some(frame_idx);

        // Previous-frame view of each active track: detected endpoints
        // for tracks matched last frame, coasted predictions otherwise.
        let virtual_prev: Vec<Detection> = self
            .active
            .iter()
            .map(|t| {
                let mut d = t.last_detection.clone();
                d.endpoints = t.predicted_endpoints(frame_idx - 1);
                d
            })
            .collect();

        let associations = associate(detections, &virtual_prev, cfg)?;

        let mut assignments = Vec::with_capacity(detections.len());
        let mut matched_track = vec![false; self.active.len()];
        for (i, assoc) in associations.iter().enumerate() {
            match assoc {
                Association::Matched(j) => {
                    let track = &mut self.active[*j];
                    track.entries.push((frame_idx, detections[i].clone()));
                    track.last_frame = frame_idx;
                    track.last_detection = detections[i].clone();
                    matched_track[*j] = true;
                    assignments.push(StepAssignment {
                        detection_index: i,
                        track_id: track.id,
                        is_birth: false,
                    });
                }
                Association::Birth => {
                    let id = self.next_id;
                    self.next_id += 1;
                    self.active.push(ActiveTrack {
                        id,
                        entries: vec![(frame_idx, detections[i].clone())],
                        last_frame: frame_idx,
                        last_detection: detections[i].clone(),
                    });
                    assignments.push(StepAssignment {
                        detection_index: i,
                        track_id: id,
                        is_birth: true,
                    });
                }
            }
        }

        // Close tracks that have now been unmatched for too long.
        let max_missed = cfg.max_missed_frames as usize;
        let mut still_active = Vec::with_capacity(self.active.len());
        for track in self.active.drain(..) {
            if frame_idx - track.last_frame > max_missed {
                self.closed
                    .push(Track::new(track.id, track.entries).expect("entries are ordered"));
            } else {
                still_active.push(track);
            }
        }
        self.active = still_active;

        Ok(assignments)
    }

    /// Close all remaining tracks and return everything produced.
    pub fn finish(mut self) -> Vec<Track> {
        for track in self.active.drain(..) {
            self.closed
                .push(Track::new(track.id, track.entries).expect("entries are ordered"));
        }
        self.closed
    }
}

/// Track a whole sequence of per-frame detection lists (index 0 is
/// frame 1). Ids in the result are canonicalized by first appearance
/// (then by endpoint position), so shuffling detections within frames
/// yields the same track set.
pub fn run_sequence(
    frames_detections: &[Vec<Detection>],
    cfg: &TrackerConfig,
) -> Result<Vec<Track>> {
    let mut state = TrackerState::new();
    for (i, detections) in frames_detections.iter().enumerate() {
        state.step(i + 1, detections, cfg)?;
    }
    let mut tracks = state.finish();
    let min_len = cfg.min_track_length.max(1);
    tracks.retain(|t| t.len() >= min_len);

    tracks.sort_by(|a, b| {
        let ka = track_sort_key(a);
        let kb = track_sort_key(b);
        ka.partial_cmp(&kb).expect("finite endpoint coordinates")
    });
    for (i, t) in tracks.iter_mut().enumerate() {
        t.id = i as u64 + 1;
    }
    Ok(tracks)
}

fn track_sort_key(t: &Track) -> (usize, f64, f64, f64, f64) {
    let (frame, det) = &t.entries[0];
    (
        *frame,
        det.endpoints.left.x,
        det.endpoints.left.y,
        det.endpoints.right.x,
        det.endpoints.right.y,
    )
}
