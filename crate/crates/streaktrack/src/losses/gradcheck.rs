//! Central finite-difference validation of the analytic loss gradients.
//!
//! Every differentiable loss is checked on random instances at
//! h = 1e-5 with relative error < 1e-4; hinge-style losses (push,
//! offset) resample instances that land near their kinks.

use rand::Rng;

use crate::domain::{EndpointPair, Point};
use crate::grid::Grid2D;
use crate::sim::{sequence_rng, StreamRng};

use super::{
    heatmap_focal_loss, offset_loss, pull_loss, push_loss, seg_loss, EmbeddingPair, LossConfig,
    OffsetSample,
};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Instances whose hinge slack or L1 component differences fall below
/// this are resampled (the subgradient is not unique at kinks).
pub const KINK_MARGIN: f64 = 1e-3;

/// Result of checking one loss over many random instances.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub loss_name: &'static str,
    pub trials: usize,
    pub max_rel_err: f64,
    pub passed: bool,
}

/// Compare an analytic gradient against central finite differences of
/// `f` at `x0`. Returns the maximum relative error over coordinates.
/// Coordinates where both gradients are below 1e-8 in magnitude count
/// as exact.
pub fn finite_diff_max_rel_err(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    analytic: &[f64],
    h: f64,
) -> f64 {
    assert_eq!(x0.len(), analytic.len());
    let mut x = x0.to_vec();
    let mut max_err: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let fp = f(&x);
        x[i] = orig - h;
        let fm = f(&x);
        x[i] = orig;
        let fd = (fp - fm) / (2.0 * h);
        let a = analytic[i];
        let denom = fd.abs().max(a.abs());
        if denom < 1e-8 {
            continue;
        }
        max_err = max_err.max((fd - a).abs() / denom);
    }
    max_err
}

fn report(loss_name: &'static str, trials: usize, max_rel_err: f64, tol: f64) -> CheckReport {
    CheckReport {
        loss_name,
        trials,
        max_rel_err,
        passed: max_rel_err < tol,
    }
}

fn check_seg(trials: usize, rng: &mut StreamRng, tol: f64) -> CheckReport {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (w, h) = (8, 8);
        let pred: Vec<f64> = (0..w * h).map(|_| rng.random_range(0.05..0.95)).collect();
        let gt_vals: Vec<f64> = (0..w * h)
            .map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 })
            .collect();
        let gt = Grid2D::from_vec(w, h, 1, gt_vals).unwrap();
        let pred_grid = Grid2D::from_vec(w, h, 1, pred.clone()).unwrap();
        let analytic = seg_loss(&pred_grid, &gt, true).unwrap().gradient.unwrap();
        let f = |x: &[f64]| {
            let g = Grid2D::from_vec(w, h, 1, x.to_vec()).unwrap();
            seg_loss(&g, &gt, false).unwrap().value
        };
        worst = worst.max(finite_diff_max_rel_err(&f, &pred, analytic.values(), DEFAULT_STEP));
    }
    report("seg", trials, worst, tol)
}

fn check_heatmap(trials: usize, rng: &mut StreamRng, tol: f64) -> CheckReport {
    let cfg = LossConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (w, h, c) = (8, 8, 2);
        let pred: Vec<f64> = (0..w * h * c).map(|_| rng.random_range(0.05..0.95)).collect();
        // A few exact peaks, the rest penalty-reduced background.
        let gt_vals: Vec<f64> = (0..w * h * c)
            .map(|_| {
                if rng.random_bool(0.05) {
                    1.0
                } else {
                    rng.random_range(0.0..0.9)
                }
            })
            .collect();
        let gt = Grid2D::from_vec(w, h, c, gt_vals).unwrap();
        let pred_grid = Grid2D::from_vec(w, h, c, pred.clone()).unwrap();
        let analytic = heatmap_focal_loss(&pred_grid, &gt, &cfg, true)
            .unwrap()
            .gradient
            .unwrap();
        let f = |x: &[f64]| {
            let g = Grid2D::from_vec(w, h, c, x.to_vec()).unwrap();
            heatmap_focal_loss(&g, &gt, &cfg, false).unwrap().value
        };
        worst = worst.max(finite_diff_max_rel_err(&f, &pred, analytic.values(), DEFAULT_STEP));
    }
    report("heatmap_focal", trials, worst, tol)
}

fn check_pull(trials: usize, rng: &mut StreamRng, tol: f64) -> CheckReport {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let k = rng.random_range(1..=5);
        let dims = 4;
        let pairs: Vec<EmbeddingPair> = (0..k)
            .map(|_| EmbeddingPair {
                left: (0..dims).map(|_| rng.random_range(-2.0..2.0)).collect(),
                right: (0..dims).map(|_| rng.random_range(-2.0..2.0)).collect(),
            })
            .collect();
        let flat: Vec<f64> = pairs
            .iter()
            .flat_map(|p| p.left.iter().chain(&p.right).copied())
            .collect();
        let analytic: Vec<f64> = pull_loss(&pairs, true)
            .gradient
            .unwrap()
            .iter()
            .flat_map(|p| p.left.iter().chain(&p.right).copied())
            .collect();
        let f = |x: &[f64]| {
            let rebuilt: Vec<EmbeddingPair> = x
                .chunks(2 * dims)
                .map(|c| EmbeddingPair {
                    left: c[..dims].to_vec(),
                    right: c[dims..].to_vec(),
                })
                .collect();
            pull_loss(&rebuilt, false).value
        };
        worst = worst.max(finite_diff_max_rel_err(&f, &flat, &analytic, DEFAULT_STEP));
    }
    report("pull", trials, worst, tol)
}

fn push_instance_has_kink(centers: &[Vec<f64>], margin: f64) -> bool {
    for a in 0..centers.len() {
        for b in (a + 1)..centers.len() {
            let dist: f64 = centers[a]
                .iter()
                .zip(&centers[b])
                .map(|(x, y)| (x - y).abs())
                .sum();
            if (margin - dist).abs() < KINK_MARGIN {
                return true;
            }
            if dist < margin
                && centers[a]
                    .iter()
                    .zip(&centers[b])
                    .any(|(x, y)| (x - y).abs() < KINK_MARGIN)
            {
                return true;
            }
        }
    }
    false
}

fn check_push(trials: usize, rng: &mut StreamRng, tol: f64) -> CheckReport {
    let margin = LossConfig::default().push_margin;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < trials {
        let k = rng.random_range(2..=6);
        let centers: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..4).map(|_| rng.random_range(-0.5..0.5)).collect())
            .collect();
        if push_instance_has_kink(&centers, margin) {
            continue;
        }
        done += 1;
        let flat: Vec<f64> = centers.iter().flatten().copied().collect();
        let analytic: Vec<f64> = push_loss(&centers, margin, true)
            .gradient
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        let f = |x: &[f64]| {
            let rebuilt: Vec<Vec<f64>> = x.chunks(4).map(|c| c.to_vec()).collect();
            push_loss(&rebuilt, margin, false).value
        };
        worst = worst.max(finite_diff_max_rel_err(&f, &flat, &analytic, DEFAULT_STEP));
    }
    report("push", trials, worst, tol)
}

fn check_offset(trials: usize, rng: &mut StreamRng, tol: f64) -> CheckReport {
    let mut worst: f64 = 0.0;
    let mut done = 0;
    'outer: while done < trials {
        let k = rng.random_range(1..=5);
        let mut samples = Vec::with_capacity(k);
        let mut flat = Vec::with_capacity(4 * k);
        for _ in 0..k {
            let prev = EndpointPair::raw(
                Point::new(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)),
                Point::new(rng.random_range(50.0..99.0), rng.random_range(0.0..50.0)),
            );
            let curr = EndpointPair::raw(
                Point::new(prev.left.x + rng.random_range(-5.0..5.0), prev.left.y + rng.random_range(-5.0..5.0)),
                Point::new(prev.right.x + rng.random_range(-5.0..5.0), prev.right.y + rng.random_range(-5.0..5.0)),
            );
            let pred_left = Point::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let pred_right = Point::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            // L1 kinks sit where a predicted component equals the true
            // displacement component.
            let tl = curr.left.sub(prev.left);
            let tr = curr.right.sub(prev.right);
            for (p, t) in [(pred_left, tl), (pred_right, tr)] {
                if (p.x - t.x).abs() < KINK_MARGIN || (p.y - t.y).abs() < KINK_MARGIN {
                    continue 'outer;
                }
            }
            flat.extend([pred_left.x, pred_left.y, pred_right.x, pred_right.y]);
            samples.push(OffsetSample {
                pred_left,
                pred_right,
                curr,
                prev,
            });
        }
        done += 1;
        let analytic: Vec<f64> = offset_loss(&samples, true)
            .gradient
            .unwrap()
            .iter()
            .flat_map(|(l, r)| [l.x, l.y, r.x, r.y])
            .collect();
        let base = samples.clone();
        let f = move |x: &[f64]| {
            let rebuilt: Vec<OffsetSample> = base
                .iter()
                .zip(x.chunks(4))
                .map(|(s, c)| OffsetSample {
                    pred_left: Point::new(c[0], c[1]),
                    pred_right: Point::new(c[2], c[3]),
                    ..*s
                })
                .collect();
            offset_loss(&rebuilt, false).value
        };
        worst = worst.max(finite_diff_max_rel_err(&f, &flat, &analytic, DEFAULT_STEP));
    }
    report("offset", trials, worst, tol)
}

/// Run the full gradient-check suite: `trials` random instances per
/// loss at the default step and tolerance.
pub fn run_suite(trials: usize, seed: u64) -> Vec<CheckReport> {
    let tol = DEFAULT_TOLERANCE;
    let mut rng = sequence_rng(seed, 0);
    if trials == 0 {
        return ["seg", "heatmap_focal", "pull", "push", "offset"]
            .into_iter()
            .map(|name| CheckReport {
                loss_name: name,
                trials: 0,
                max_rel_err: 0.0,
                passed: true,
            })
            .collect();
    }
    vec![
        check_seg(trials, &mut rng, tol),
        check_heatmap(trials, &mut rng, tol),
        check_pull(trials, &mut rng, tol),
        check_push(trials, &mut rng, tol),
        check_offset(trials, &mut rng, tol),
    ]
}
