//! CLEAR-MOT accumulation: per-frame optimal matching with carried-over
//! correspondences, identity-switch counting, and MOTA.

use std::collections::HashMap;

use crate::assign::max_score_matching;

use super::{FrameObject, MatchConfig, TrackSet};

/// Result of matching one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatch {
    /// (gt_index, pred_index) pairs.
    pub pairs: Vec<(usize, usize)>,
    pub false_positives: usize,
    pub misses: usize,
}

/// Optimal one-to-one assignment maximizing total similarity over pairs
/// at or above the match cutoff; unmatched predictions are false
/// positives, unmatched ground truths are misses.
pub fn frame_match(gt: &[FrameObject], pred: &[FrameObject], cfg: &MatchConfig) -> FrameMatch {
    if gt.is_empty() || pred.is_empty() {
        return FrameMatch {
            pairs: Vec::new(),
            false_positives: pred.len(),
            misses: gt.len(),
        };
    }
    let score: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| {
            pred.iter()
                .map(|p| cfg.match_score(g, p).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    let pairs = max_score_matching(&score, 0.0);
    FrameMatch {
        false_positives: pred.len() - pairs.len(),
        misses: gt.len() - pairs.len(),
        pairs,
    }
}

/// Event counts over a sequence, per CLEAR-MOT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClearCounts {
    pub gt_total: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
}

impl ClearCounts {
    pub fn merge(&mut self, other: &ClearCounts) {
        self.gt_total += other.gt_total;
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
        self.id_switches += other.id_switches;
    }
}

/// Accumulate CLEAR counts over a sequence. Correspondences from the
/// previous frame are carried over while still valid, then the optimal
/// assignment runs on the remainder; a matched ground truth whose
/// predicted id differs from its last known predicted id counts as an
/// identity switch.
pub fn clear_accumulate(gt: &TrackSet, pred: &TrackSet, cfg: &MatchConfig) -> ClearCounts {
    let frames = gt.frames.len().max(pred.frames.len());
    let empty: Vec<FrameObject> = Vec::new();
    let mut counts = ClearCounts::default();
    // gt id -> pred id of the last frame's correspondence.
    let mut carried: HashMap<u64, u64> = HashMap::new();
    // gt id -> pred id of the most recent match ever made.
    let mut last_known: HashMap<u64, u64> = HashMap::new();

    for t in 0..frames {
        let gt_objs = gt.frames.get(t).unwrap_or(&empty);
        let pred_objs = pred.frames.get(t).unwrap_or(&empty);
        counts.gt_total += gt_objs.len();

        let mut gt_matched = vec![false; gt_objs.len()];
        let mut pred_matched = vec![false; pred_objs.len()];
        let mut matches: Vec<(usize, usize)> = Vec::new();

        // Keep still-valid correspondences from the previous frame.
        for (gi, g) in gt_objs.iter().enumerate() {
            if let Some(&pid) = carried.get(&g.id) {
                if let Some(pi) = pred_objs.iter().position(|p| p.id == pid) {
                    if !pred_matched[pi] && cfg.match_score(g, &pred_objs[pi]).is_some() {
                        gt_matched[gi] = true;
                        pred_matched[pi] = true;
                        matches.push((gi, pi));
                    }
                }
            }
        }

        // Optimal assignment on whatever remains.
        let rest_gt: Vec<usize> = (0..gt_objs.len()).filter(|&i| !gt_matched[i]).collect();
        let rest_pred: Vec<usize> = (0..pred_objs.len()).filter(|&i| !pred_matched[i]).collect();
        if !rest_gt.is_empty() && !rest_pred.is_empty() {
            let score: Vec<Vec<f64>> = rest_gt
                .iter()
                .map(|&gi| {
                    rest_pred
                        .iter()
                        .map(|&pi| cfg.match_score(&gt_objs[gi], &pred_objs[pi]).unwrap_or(f64::NAN))
                        .collect()
                })
                .collect();
            for (ri, rj) in max_score_matching(&score, 0.0) {
                matches.push((rest_gt[ri], rest_pred[rj]));
            }
        }

        counts.true_positives += matches.len();
        counts.false_positives += pred_objs.len() - matches.len();
        counts.false_negatives += gt_objs.len() - matches.len();

        let mut next_carried = HashMap::new();
        for (gi, pi) in matches {
            let gid = gt_objs[gi].id;
            let pid = pred_objs[pi].id;
            if let Some(&old) = last_known.get(&gid) {
                if old != pid {
                    counts.id_switches += 1;
                }
            }
            last_known.insert(gid, pid);
            next_carried.insert(gid, pid);
        }
        carried = next_carried;
    }
    counts
}

/// MOTA = 1 − (FN + FP + IDSW) / GT. NaN when the sequence has no
/// ground-truth objects.
pub fn mota(counts: &ClearCounts) -> f64 {
    if counts.gt_total == 0 {
        return f64::NAN;
    }
    1.0 - (counts.false_negatives + counts.false_positives + counts.id_switches) as f64
        / counts.gt_total as f64
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{obj, track_set};
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_sets_match_fully() {
        let objs = vec![obj(1, 5.0, 5.0), obj(2, 50.0, 50.0)];
        let m = frame_match(&objs, &objs, &MatchConfig::default());
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.misses, 0);
    }

    #[test]
    fn disjoint_sets_are_all_fp_fn() {
        let gt = vec![obj(1, 5.0, 5.0)];
        let pred = vec![obj(1, 200.0, 200.0), obj(2, 100.0, 10.0)];
        let m = frame_match(&gt, &pred, &MatchConfig::default());
        assert!(m.pairs.is_empty());
        assert_eq!(m.false_positives, 2);
        assert_eq!(m.misses, 1);
    }

    #[test]
    fn frame_match_equals_brute_force_on_random_instances() {
        let cfg = MatchConfig::default();
        let mut rng = crate::sim::sequence_rng(60, 0);
        for _ in 0..100 {
            let n = rng.random_range(0..=4);
            let m = rng.random_range(0..=4);
            let gt: Vec<FrameObject> = (0..n)
                .map(|k| {
                    obj(
                        k + 1,
                        rng.random_range(0.0..40.0),
                        rng.random_range(0.0..40.0),
                    )
                })
                .collect();
            let pred: Vec<FrameObject> = (0..m)
                .map(|k| {
                    obj(
                        k + 1,
                        rng.random_range(0.0..40.0),
                        rng.random_range(0.0..40.0),
                    )
                })
                .collect();
            let result = frame_match(&gt, &pred, &cfg);
            let got: f64 = result
                .pairs
                .iter()
                .map(|&(i, j)| cfg.match_score(&gt[i], &pred[j]).unwrap())
                .sum();

            // Brute force: maximize total similarity over all partial
            // one-to-one matchings of eligible pairs.
            fn best(
                gt: &[FrameObject],
                pred: &[FrameObject],
                cfg: &MatchConfig,
                i: usize,
                used: &mut Vec<bool>,
            ) -> f64 {
                if i == gt.len() {
                    return 0.0;
                }
                // Option: leave gt[i] unmatched.
                let mut best_v = best(gt, pred, cfg, i + 1, used);
                for j in 0..pred.len() {
                    if !used[j] {
                        if let Some(s) = cfg.match_score(&gt[i], &pred[j]) {
                            used[j] = true;
                            best_v = best_v.max(s + best(gt, pred, cfg, i + 1, used));
                            used[j] = false;
                        }
                    }
                }
                best_v
            }
            let want = best(&gt, &pred, &cfg, 0, &mut vec![false; pred.len()]);
            assert!(
                (got - want).abs() < 1e-9,
                "hungarian total {got} vs brute force {want}"
            );
        }
    }

    #[test]
    fn hand_enumerated_toy_gives_mota_0_7() {
        // 10 GT boxes: 2 tracks × 5 frames. One miss, one false positive,
        // one identity switch.
        let gt = track_set(
            (0..5)
                .map(|t| vec![obj(1, 10.0 + t as f64, 10.0), obj(2, 10.0 + t as f64, 60.0)])
                .collect(),
        );
        let mut pred_frames: Vec<Vec<FrameObject>> = (0..5)
            .map(|t| vec![obj(1, 10.0 + t as f64, 10.0), obj(2, 10.0 + t as f64, 60.0)])
            .collect();
        pred_frames[1].remove(0); // FN at frame 2
        pred_frames[3].push(obj(9, 200.0, 200.0)); // FP at frame 4
        pred_frames[4][1].id = 5; // IDSW at frame 5 (track 2 -> id 5)
        let counts = clear_accumulate(&gt, &track_set(pred_frames), &MatchConfig::default());
        assert_eq!(counts.gt_total, 10);
        assert_eq!(counts.false_negatives, 1);
        assert_eq!(counts.false_positives, 1);
        assert_eq!(counts.id_switches, 1);
        assert!((mota(&counts) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn perfect_tracking_is_one() {
        let gt = track_set(
            (0..5)
                .map(|t| vec![obj(1, 10.0 + t as f64, 10.0)])
                .collect(),
        );
        let counts = clear_accumulate(&gt, &gt, &MatchConfig::default());
        assert_eq!(mota(&counts), 1.0);
    }

    #[test]
    fn all_missed_is_zero() {
        let gt = track_set(
            (0..5)
                .map(|t| vec![obj(1, 10.0 + t as f64, 10.0)])
                .collect(),
        );
        let pred = track_set(vec![vec![]; 5]);
        let counts = clear_accumulate(&gt, &pred, &MatchConfig::default());
        assert_eq!(counts.false_negatives, 5);
        assert_eq!(counts.false_positives, 0);
        assert_eq!(counts.id_switches, 0);
        assert_eq!(mota(&counts), 0.0);
    }

    #[test]
    fn empty_gt_is_nan() {
        let counts = ClearCounts::default();
        assert!(mota(&counts).is_nan());
    }

    #[test]
    fn switch_counted_across_gaps() {
        // Track matched to id 1, disappears, then matched to id 2: one
        // switch against the last known id.
        let gt = track_set(
            (0..3)
                .map(|t| vec![obj(7, 10.0 + t as f64, 10.0)])
                .collect(),
        );
        let pred = track_set(vec![
            vec![obj(1, 10.0, 10.0)],
            vec![],
            vec![obj(2, 12.0, 10.0)],
        ]);
        let counts = clear_accumulate(&gt, &pred, &MatchConfig::default());
        assert_eq!(counts.id_switches, 1);
    }

    #[test]
    fn carry_over_prefers_previous_correspondence() {
        // Two predictions both inside the gate of one GT; the carried
        // correspondence must win even if the other is slightly closer.
        let gt = track_set(vec![
            vec![obj(1, 10.0, 10.0)],
            vec![obj(1, 10.0, 10.0)],
        ]);
        let pred = track_set(vec![
            vec![obj(5, 10.0, 10.0)],
            vec![obj(5, 11.0, 10.0), obj(6, 10.0, 10.0)],
        ]);
        let counts = clear_accumulate(&gt, &pred, &MatchConfig::default());
        assert_eq!(
            counts.id_switches, 0,
            "carried correspondence must prevent a spurious switch"
        );
        assert_eq!(counts.false_positives, 1);
    }
}
