//! Identity F1: a global trajectory-level bipartite assignment between
//! ground-truth and predicted tracks that maximizes identity-consistent
//! matches, then IDF1 = 2·IDTP / (2·IDTP + IDFP + IDFN).

use std::collections::BTreeMap;

use crate::assign::max_score_matching;

use super::{MatchConfig, TrackSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdCounts {
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

impl IdCounts {
    pub fn merge(&mut self, other: &IdCounts) {
        self.idtp += other.idtp;
        self.idfp += other.idfp;
        self.idfn += other.idfn;
    }
}

/// Count identity-consistent matches under the best global id mapping.
pub fn idf1_counts(gt: &TrackSet, pred: &TrackSet, cfg: &MatchConfig) -> IdCounts {
    let frames = gt.frames.len().max(pred.frames.len());
    let empty = Vec::new();

    // Dense indices for track ids, in deterministic order.
    let mut gt_ids: BTreeMap<u64, usize> = BTreeMap::new();
    let mut pred_ids: BTreeMap<u64, usize> = BTreeMap::new();
    for f in &gt.frames {
        for o in f {
            let next = gt_ids.len();
            gt_ids.entry(o.id).or_insert(next);
        }
    }
    for f in &pred.frames {
        for o in f {
            let next = pred_ids.len();
            pred_ids.entry(o.id).or_insert(next);
        }
    }

    let gt_boxes = gt.total_objects();
    let pred_boxes = pred.total_objects();
    if gt_ids.is_empty() || pred_ids.is_empty() {
        return IdCounts {
            idtp: 0,
            idfp: pred_boxes,
            idfn: gt_boxes,
        };
    }

    // overlap[g][p] = number of frames where gt track g and pred track p
    // are both present and close enough to match.
    let mut overlap = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    for t in 0..frames {
        let gt_objs = gt.frames.get(t).unwrap_or(&empty);
        let pred_objs = pred.frames.get(t).unwrap_or(&empty);
        for g in gt_objs {
            for p in pred_objs {
                if cfg.match_score(g, p).is_some() {
                    overlap[gt_ids[&g.id]][pred_ids[&p.id]] += 1;
                }
            }
        }
    }

    let score: Vec<Vec<f64>> = overlap
        .iter()
        .map(|row| row.iter().map(|&c| c as f64).collect())
        .collect();
    let pairs = max_score_matching(&score, f64::NEG_INFINITY);
    let idtp: usize = pairs.iter().map(|&(g, p)| overlap[g][p]).sum();

    IdCounts {
        idtp,
        idfp: pred_boxes - idtp,
        idfn: gt_boxes - idtp,
    }
}

/// IDF1 from counts; NaN when there are no boxes at all.
pub fn idf1(counts: &IdCounts) -> f64 {
    let denom = 2 * counts.idtp + counts.idfp + counts.idfn;
    if denom == 0 {
        return f64::NAN;
    }
    2.0 * counts.idtp as f64 / denom as f64
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{obj, track_set};
    use super::*;

    #[test]
    fn perfect_tracking_is_one() {
        let gt = track_set(
            (0..4)
                .map(|t| vec![obj(1, 10.0 + t as f64, 10.0), obj(2, 10.0, 60.0)])
                .collect(),
        );
        let counts = idf1_counts(&gt, &gt, &MatchConfig::default());
        assert_eq!(idf1(&counts), 1.0);
    }

    #[test]
    fn empty_predictions_are_zero() {
        let gt = track_set((0..4).map(|t| vec![obj(1, 10.0 + t as f64, 10.0)]).collect());
        let pred = track_set(vec![vec![]; 4]);
        let counts = idf1_counts(&gt, &pred, &MatchConfig::default());
        assert_eq!(idf1(&counts), 0.0);
        assert_eq!(counts.idfn, 4);
    }

    #[test]
    fn mid_sequence_swap_matches_exhaustive_assignment() {
        // Two GT tracks, predictions swap ids after frame k; compare the
        // result against brute force over both global id assignments.
        for k in 1..4 {
            let frames = 4;
            let gt = track_set(
                (0..frames)
                    .map(|t| {
                        vec![obj(1, 10.0 + t as f64, 10.0), obj(2, 10.0 + t as f64, 60.0)]
                    })
                    .collect(),
            );
            let pred = track_set(
                (0..frames)
                    .map(|t| {
                        let (a, b) = if t < k { (1, 2) } else { (2, 1) };
                        vec![obj(a, 10.0 + t as f64, 10.0), obj(b, 10.0 + t as f64, 60.0)]
                    })
                    .collect(),
            );
            let counts = idf1_counts(&gt, &pred, &MatchConfig::default());

            // Brute force: assignment (1->1, 2->2) keeps k frames per
            // track; (1->2, 2->1) keeps frames-k frames per track.
            let keep = k.max(frames - k) * 2;
            let idtp = keep;
            let idfp = 2 * frames - idtp;
            let idfn = 2 * frames - idtp;
            assert_eq!(counts.idtp, idtp, "k={k}");
            let expect = 2.0 * idtp as f64 / (2 * idtp + idfp + idfn) as f64;
            assert!((idf1(&counts) - expect).abs() < 1e-12);
        }
    }
}
