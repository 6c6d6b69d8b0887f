//! Higher Order Tracking Accuracy: per-α detection matching guided by a
//! global alignment score, association ratios over true-positive pairs,
//! and the DetA/AssA decomposition with HOTA(α) = √(DetA(α)·AssA(α)).

use std::collections::BTreeMap;

use crate::assign::max_score_matching;

use super::{MatchConfig, TrackSet};

const EPS: f64 = 1e-12;

/// Pooled per-α counts, mergeable across sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct HotaAccum {
    pub alphas: Vec<f64>,
    pub gt_total: usize,
    pub pred_total: usize,
    /// Per α: number of true-positive matches.
    pub tp: Vec<usize>,
    /// Per α: sum over TP matches of the association ratio
    /// TPA / (TPA + FNA + FPA).
    pub ass_sum: Vec<f64>,
}

impl HotaAccum {
    pub fn merge(&mut self, other: &HotaAccum) {
        assert_eq!(self.alphas, other.alphas, "alpha grids must agree");
        self.gt_total += other.gt_total;
        self.pred_total += other.pred_total;
        for i in 0..self.tp.len() {
            self.tp[i] += other.tp[i];
            self.ass_sum[i] += other.ass_sum[i];
        }
    }
}

/// Accumulate HOTA statistics for one sequence.
pub fn hota_accumulate(gt: &TrackSet, pred: &TrackSet, cfg: &MatchConfig) -> HotaAccum {
    let frames = gt.frames.len().max(pred.frames.len());
    let empty = Vec::new();

    let mut gt_ids: BTreeMap<u64, usize> = BTreeMap::new();
    let mut pred_ids: BTreeMap<u64, usize> = BTreeMap::new();
    let mut gt_count: Vec<usize> = Vec::new();
    let mut pred_count: Vec<usize> = Vec::new();

    // Per-frame dense index lists plus similarity matrices.
    let mut frame_data: Vec<(Vec<usize>, Vec<usize>, Vec<Vec<f64>>)> =
        Vec::with_capacity(frames);
    for t in 0..frames {
        let gt_objs = gt.frames.get(t).unwrap_or(&empty);
        let pred_objs = pred.frames.get(t).unwrap_or(&empty);
        let g_idx: Vec<usize> = gt_objs
            .iter()
            .map(|o| {
                let next = gt_ids.len();
                let idx = *gt_ids.entry(o.id).or_insert(next);
                if idx == gt_count.len() {
                    gt_count.push(0);
                }
                gt_count[idx] += 1;
                idx
            })
            .collect();
        let p_idx: Vec<usize> = pred_objs
            .iter()
            .map(|o| {
                let next = pred_ids.len();
                let idx = *pred_ids.entry(o.id).or_insert(next);
                if idx == pred_count.len() {
                    pred_count.push(0);
                }
                pred_count[idx] += 1;
                idx
            })
            .collect();
        let sim: Vec<Vec<f64>> = gt_objs
            .iter()
            .map(|g| pred_objs.iter().map(|p| cfg.similarity(g, p)).collect())
            .collect();
        frame_data.push((g_idx, p_idx, sim));
    }

    let gt_total: usize = gt_count.iter().sum();
    let pred_total: usize = pred_count.iter().sum();
    let n_gt = gt_ids.len();
    let n_pred = pred_ids.len();

    // Global alignment: soft potential-match mass between each id pair.
    let mut potential = vec![vec![0.0f64; n_pred]; n_gt];
    for (g_idx, p_idx, sim) in &frame_data {
        if g_idx.is_empty() || p_idx.is_empty() {
            continue;
        }
        let row_sums: Vec<f64> = sim.iter().map(|r| r.iter().sum()).collect();
        let mut col_sums = vec![0.0; p_idx.len()];
        for row in sim {
            for (j, v) in row.iter().enumerate() {
                col_sums[j] += v;
            }
        }
        for (i, row) in sim.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                if s > EPS {
                    let denom = row_sums[i] + col_sums[j] - s;
                    potential[g_idx[i]][p_idx[j]] += s / denom;
                }
            }
        }
    }
    let mut alignment = vec![vec![0.0f64; n_pred]; n_gt];
    for g in 0..n_gt {
        for p in 0..n_pred {
            let pm = potential[g][p];
            if pm > EPS {
                alignment[g][p] = pm / (gt_count[g] as f64 + pred_count[p] as f64 - pm);
            }
        }
    }

    // Per α: alignment-guided per-frame matching, filtered by s >= α.
    let mut tp = vec![0usize; cfg.hota_alphas.len()];
    let mut ass_sum = vec![0.0f64; cfg.hota_alphas.len()];
    for (ai, &alpha) in cfg.hota_alphas.iter().enumerate() {
        let mut match_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (g_idx, p_idx, sim) in &frame_data {
            if g_idx.is_empty() || p_idx.is_empty() {
                continue;
            }
            let score: Vec<Vec<f64>> = (0..g_idx.len())
                .map(|i| {
                    (0..p_idx.len())
                        .map(|j| {
                            if sim[i][j] >= alpha - EPS {
                                alignment[g_idx[i]][p_idx[j]] * sim[i][j] + EPS
                            } else {
                                f64::NAN
                            }
                        })
                        .collect()
                })
                .collect();
            for (i, j) in max_score_matching(&score, 0.0) {
                tp[ai] += 1;
                *match_count.entry((g_idx[i], p_idx[j])).or_insert(0) += 1;
            }
        }
        for (&(g, p), &c) in &match_count {
            let tpa = c as f64;
            let union = gt_count[g] as f64 + pred_count[p] as f64 - tpa;
            ass_sum[ai] += tpa * (tpa / union);
        }
    }

    HotaAccum {
        alphas: cfg.hota_alphas.clone(),
        gt_total,
        pred_total,
        tp,
        ass_sum,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaScore {
    pub alpha: f64,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
}

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotaScores {
    /// Means over the α grid.
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub per_alpha: Vec<AlphaScore>,
}

/// Final HOTA/DetA/AssA values: per-α scores and their means.
pub fn hota_scores(acc: &HotaAccum) -> HotaScores {
    let mut per_alpha = Vec::with_capacity(acc.alphas.len());
    for (i, &alpha) in acc.alphas.iter().enumerate() {
        let tp = acc.tp[i] as f64;
        let fn_count = acc.gt_total as f64 - tp;
        let fp = acc.pred_total as f64 - tp;
        let det_denom = tp + fn_count + fp;
        let deta = if det_denom > 0.0 { tp / det_denom } else { 0.0 };
        let assa = if tp > 0.0 { acc.ass_sum[i] / tp } else { 0.0 };
        per_alpha.push(AlphaScore {
            alpha,
            hota: (deta * assa).sqrt(),
            deta,
            assa,
        });
    }
    let n = per_alpha.len() as f64;
    HotaScores {
        hota: per_alpha.iter().map(|a| a.hota).sum::<f64>() / n,
        deta: per_alpha.iter().map(|a| a.deta).sum::<f64>() / n,
        assa: per_alpha.iter().map(|a| a.assa).sum::<f64>() / n,
        per_alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{obj, track_set};
    use super::*;
    use rand::Rng;

    #[test]
    fn perfect_tracking_is_one_at_every_alpha() {
        let gt = track_set(
            (0..5)
                .map(|t| vec![obj(1, 10.0 + t as f64, 10.0), obj(2, 40.0, 40.0)])
                .collect(),
        );
        let acc = hota_accumulate(&gt, &gt, &MatchConfig::default());
        let scores = hota_scores(&acc);
        assert_eq!(scores.hota, 1.0);
        assert_eq!(scores.deta, 1.0);
        assert_eq!(scores.assa, 1.0);
        for a in &scores.per_alpha {
            assert_eq!(a.hota, 1.0);
        }
    }

    #[test]
    fn halfway_swap_matches_hand_derivation() {
        // Perfect detections, ids swapped for the second half: DetA = 1,
        // every TP pair has TPA=2, FNA=FPA=2 → AssA = 2/6 = 1/3.
        let gt = track_set(
            (0..4)
                .map(|t| {
                    vec![obj(1, 10.0 + t as f64, 10.0), obj(2, 10.0 + t as f64, 60.0)]
                })
                .collect(),
        );
        let pred = track_set(
            (0..4)
                .map(|t| {
                    let (a, b) = if t < 2 { (1, 2) } else { (2, 1) };
                    vec![obj(a, 10.0 + t as f64, 10.0), obj(b, 10.0 + t as f64, 60.0)]
                })
                .collect(),
        );
        let scores = hota_scores(&hota_accumulate(&gt, &pred, &MatchConfig::default()));
        assert!((scores.deta - 1.0).abs() < 1e-12);
        assert!((scores.assa - 1.0 / 3.0).abs() < 1e-12);
        assert!((scores.hota - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hota_squared_equals_deta_times_assa_per_alpha() {
        let mut rng = crate::sim::sequence_rng(70, 0);
        let cfg = MatchConfig::default();
        for _ in 0..100 {
            let frames = rng.random_range(1..=5);
            let gt = track_set(
                (0..frames)
                    .map(|_| {
                        (0..rng.random_range(0..4))
                            .map(|k| {
                                obj(
                                    k + 1,
                                    rng.random_range(0.0..60.0),
                                    rng.random_range(0.0..60.0),
                                )
                            })
                            .collect()
                    })
                    .collect(),
            );
            let pred = track_set(
                (0..frames)
                    .map(|_| {
                        (0..rng.random_range(0..4))
                            .map(|k| {
                                obj(
                                    k + 1,
                                    rng.random_range(0.0..60.0),
                                    rng.random_range(0.0..60.0),
                                )
                            })
                            .collect()
                    })
                    .collect(),
            );
            let scores = hota_scores(&hota_accumulate(&gt, &pred, &cfg));
            for a in &scores.per_alpha {
                assert!(
                    (a.hota * a.hota - a.deta * a.assa).abs() < 1e-12,
                    "HOTA² must equal DetA·AssA at α={}",
                    a.alpha
                );
            }
        }
    }
}
