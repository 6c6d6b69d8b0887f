//! Reference implementations of the training objectives with analytic
//! gradients: segmentation cross-entropy, penalty-reduced focal loss for
//! endpoint heatmaps, pull/push embedding losses, endpoint offset
//! regression, and their weighted total.
//!
//! These are pure numeric functions — no optimizer, no autograd graph.
//! They exist to verify the objective math and to serve external
//! training code as an oracle; every gradient is validated against
//! central finite differences (see [`gradcheck`]).

pub mod gradcheck;

use serde::{Deserialize, Serialize};

use crate::domain::{EndpointPair, Point};
use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Loss weights and shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda_seg: f64,
    pub lambda_hm: f64,
    pub lambda_emb: f64,
    pub lambda_off: f64,
    /// Focal exponent on the prediction.
    pub focal_alpha: f64,
    /// Focal penalty-reduction exponent on the ground truth.
    pub focal_beta: f64,
    /// Minimum feature distance between different objects' centers.
    pub push_margin: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_seg: 1.0,
            lambda_hm: 10.0,
            lambda_emb: 1.0,
            lambda_off: 0.1,
            focal_alpha: 2.0,
            focal_beta: 4.0,
            push_margin: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_seg", self.lambda_seg),
            ("lambda_hm", self.lambda_hm),
            ("lambda_emb", self.lambda_emb),
            ("lambda_off", self.lambda_off),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid("LossConfig", format!("{name} must be >= 0")));
            }
        }
        if !(self.push_margin > 0.0) {
            return Err(Error::invalid("LossConfig", "push_margin must be > 0"));
        }
        Ok(())
    }
}

/// A scalar loss with an optional gradient of the same shape as the
/// differentiated input.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue<G> {
    pub value: f64,
    pub gradient: Option<G>,
}

/// Predictions are clamped into [ε, 1−ε] before logarithms.
pub const PROB_CLAMP_EPS: f64 = 1e-7;

/// Mean binary cross-entropy between a predicted mask in (0, 1) and a
/// binary ground-truth mask. Gradient is with respect to the prediction
/// (zero where the clamp is active).
pub fn seg_loss(pred: &Grid2D, gt: &Grid2D, with_grad: bool) -> Result<LossValue<Grid2D>> {
    if !pred.same_shape(gt) {
        return Err(Error::DimMismatch("seg_loss: pred vs gt".into()));
    }
    if pred.channels() != 1 {
        return Err(Error::DimMismatch(
            "seg_loss expects single-channel masks".into(),
        ));
    }
    let n = (pred.width() * pred.height()) as f64;
    let mut value = 0.0;
    let mut grad = if with_grad {
        Some(Grid2D::new(pred.width(), pred.height(), 1))
    } else {
        None
    };
    for (i, (&p_raw, &m)) in pred.values().iter().zip(gt.values()).enumerate() {
        let p = p_raw.clamp(PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS);
        value -= (m * p.ln() + (1.0 - m) * (1.0 - p).ln()) / n;
        if let Some(g) = grad.as_mut() {
            let clamped = p_raw <= PROB_CLAMP_EPS || p_raw >= 1.0 - PROB_CLAMP_EPS;
            g.values_mut()[i] = if clamped {
                0.0
            } else {
                -(m / p - (1.0 - m) / (1.0 - p)) / n
            };
        }
    }
    Ok(LossValue {
        value,
        gradient: grad,
    })
}

/// Penalty-reduced pixelwise focal loss for endpoint heatmaps.
///
/// At ground-truth peaks (H = 1): (1−Ĥ)^α · log Ĥ. Elsewhere:
/// (1−H)^β · Ĥ^α · log(1−Ĥ). The negated sum is divided by the number
/// of peak pixels (at least 1).
pub fn heatmap_focal_loss(
    pred: &Grid2D,
    gt: &Grid2D,
    cfg: &LossConfig,
    with_grad: bool,
) -> Result<LossValue<Grid2D>> {
    if !pred.same_shape(gt) {
        return Err(Error::DimMismatch("heatmap_focal_loss: pred vs gt".into()));
    }
    let alpha = cfg.focal_alpha;
    let beta = cfg.focal_beta;
    let n_pos = gt.values().iter().filter(|&&h| h == 1.0).count().max(1) as f64;

    let mut value = 0.0;
    let mut grad = if with_grad {
        Some(Grid2D::new(pred.width(), pred.height(), pred.channels()))
    } else {
        None
    };
    for (i, (&p_raw, &h)) in pred.values().iter().zip(gt.values()).enumerate() {
        let p = p_raw.clamp(PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS);
        let (term, dterm) = if h == 1.0 {
            let t = (1.0 - p).powf(alpha) * p.ln();
            let d = -alpha * (1.0 - p).powf(alpha - 1.0) * p.ln() + (1.0 - p).powf(alpha) / p;
            (t, d)
        } else {
            let w = (1.0 - h).powf(beta);
            let t = w * p.powf(alpha) * (1.0 - p).ln();
            let d = w * (alpha * p.powf(alpha - 1.0) * (1.0 - p).ln() - p.powf(alpha) / (1.0 - p));
            (t, d)
        };
        value -= term / n_pos;
        if let Some(g) = grad.as_mut() {
            let clamped = p_raw <= PROB_CLAMP_EPS || p_raw >= 1.0 - PROB_CLAMP_EPS;
            g.values_mut()[i] = if clamped { 0.0 } else { -dterm / n_pos };
        }
    }
    Ok(LossValue {
        value,
        gradient: grad,
    })
}

/// Left/right embedding vectors of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl EmbeddingPair {
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::DimMismatch("embedding pair dims differ".into()));
        }
        Ok(EmbeddingPair { left, right })
    }

    /// Mean of the two endpoint embeddings.
    pub fn center(&self) -> Vec<f64> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| (l + r) / 2.0)
            .collect()
    }
}

/// Pull loss: mean over objects of the squared distance of both endpoint
/// embeddings from their center, summed over embedding dimensions.
/// Gradient is with respect to (left, right) of each pair.
pub fn pull_loss(pairs: &[EmbeddingPair], with_grad: bool) -> LossValue<Vec<EmbeddingPair>> {
    let k = pairs.len();
    if k == 0 {
        return LossValue {
            value: 0.0,
            gradient: with_grad.then(Vec::new),
        };
    }
    let kf = k as f64;
    let mut value = 0.0;
    let mut grad = with_grad.then(Vec::new);
    for pair in pairs {
        let center = pair.center();
        let mut gl = vec![0.0; pair.left.len()];
        let mut gr = vec![0.0; pair.right.len()];
        for d in 0..pair.left.len() {
            let (l, r, c) = (pair.left[d], pair.right[d], center[d]);
            value += ((l - c) * (l - c) + (r - c) * (r - c)) / kf;
            // With the center treated as (l + r) / 2 the term reduces to
            // (l − r)²/2, so ∂/∂l = (l − r) and ∂/∂r = (r − l).
            gl[d] = (l - r) / kf;
            gr[d] = (r - l) / kf;
        }
        if let Some(g) = grad.as_mut() {
            g.push(EmbeddingPair {
                left: gl,
                right: gr,
            });
        }
    }
    LossValue {
        value,
        gradient: grad,
    }
}

/// Push loss: mean hinge over ordered pairs of distinct objects,
/// max(0, Δ − |e_k − e_j|₁), normalized by K(K−1). Zero for fewer than
/// two objects. Gradient is the subgradient (sign convention at kinks:
/// sign(0) = 0).
pub fn push_loss(centers: &[Vec<f64>], margin: f64, with_grad: bool) -> LossValue<Vec<Vec<f64>>> {
    let k = centers.len();
    if k < 2 {
        return LossValue {
            value: 0.0,
            gradient: with_grad.then(|| centers.iter().map(|c| vec![0.0; c.len()]).collect()),
        };
    }
    let norm = (k * (k - 1)) as f64;
    let mut value = 0.0;
    let mut grad = with_grad.then(|| {
        centers
            .iter()
            .map(|c| vec![0.0; c.len()])
            .collect::<Vec<Vec<f64>>>()
    });
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let dist: f64 = centers[a]
                .iter()
                .zip(&centers[b])
                .map(|(x, y)| (x - y).abs())
                .sum();
            let slack = margin - dist;
            if slack > 0.0 {
                value += slack / norm;
                if let Some(g) = grad.as_mut() {
                    for d in 0..centers[a].len() {
                        let s = (centers[a][d] - centers[b][d]).signum();
                        let s = if centers[a][d] == centers[b][d] { 0.0 } else { s };
                        g[a][d] -= s / norm;
                        g[b][d] += s / norm;
                    }
                }
            }
        }
    }
    LossValue {
        value,
        gradient: grad,
    }
}

/// Predicted offsets plus both-frame ground truth for one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetSample {
    pub pred_left: Point,
    pub pred_right: Point,
    /// Ground-truth endpoints at the current frame.
    pub curr: EndpointPair,
    /// Ground-truth endpoints at the previous frame.
    pub prev: EndpointPair,
}

/// Offset regression loss: mean over objects of the L1 difference
/// between predicted offsets and true endpoint displacements, summed
/// over left and right endpoints. Gradient is with respect to the
/// predicted offsets.
pub fn offset_loss(samples: &[OffsetSample], with_grad: bool) -> LossValue<Vec<(Point, Point)>> {
    let k = samples.len();
    if k == 0 {
        return LossValue {
            value: 0.0,
            gradient: with_grad.then(Vec::new),
        };
    }
    let kf = k as f64;
    let mut value = 0.0;
    let mut grad = with_grad.then(Vec::new);
    for s in samples {
        let true_left = s.curr.left.sub(s.prev.left);
        let true_right = s.curr.right.sub(s.prev.right);
        let dl = s.pred_left.sub(true_left);
        let dr = s.pred_right.sub(true_right);
        value += (dl.x.abs() + dl.y.abs() + dr.x.abs() + dr.y.abs()) / kf;
        if let Some(g) = grad.as_mut() {
            let sgn = |v: f64| if v == 0.0 { 0.0 } else { v.signum() / kf };
            g.push((
                Point::new(sgn(dl.x), sgn(dl.y)),
                Point::new(sgn(dr.x), sgn(dr.y)),
            ));
        }
    }
    LossValue {
        value,
        gradient: grad,
    }
}

/// Component values entering the weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub seg: f64,
    pub heatmap: f64,
    pub pull: f64,
    pub push: f64,
    pub offset: f64,
}

/// Weighted total: λ_seg·seg + λ_hm·hm + λ_emb·(pull + push) + λ_off·off.
pub fn total_loss(c: &LossComponents, cfg: &LossConfig) -> f64 {
    cfg.lambda_seg * c.seg
        + cfg.lambda_hm * c.heatmap
        + cfg.lambda_emb * (c.pull + c.push)
        + cfg.lambda_off * c.offset
}
