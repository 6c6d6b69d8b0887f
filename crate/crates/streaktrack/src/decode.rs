//! Detection decoding: ground-truth heatmap rendering, local-maximum
//! peak extraction, embedding-based left/right endpoint pairing, mask
//! gating, and an oracle detector with configurable corruption that
//! stands in for a trained network.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::assign::{greedy_min_matching, min_cost_matching_gated};
use crate::domain::{endpoint_is_left, AnnotatedObject, Detection, EndpointPair, Point};
use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Heatmap construction and decoding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    /// Gaussian std of ground-truth kernels, pixels.
    pub sigma: f64,
    /// Minimum heatmap value for a pixel to qualify as a peak.
    pub peak_threshold: f64,
    /// Odd window size for the local-maximum test.
    pub nms_window: usize,
    /// Keep at most this many peaks per channel, highest scores first.
    pub max_peaks: usize,
    /// Default embedding-distance gate for pairing.
    pub embedding_gate: f64,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            sigma: 2.0,
            peak_threshold: 0.25,
            nms_window: 5,
            max_peaks: 64,
            embedding_gate: 1.0,
        }
    }
}

impl HeatmapSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("HeatmapSpec", "sigma must be > 0"));
        }
        if self.nms_window < 3 || self.nms_window % 2 == 0 {
            return Err(Error::invalid("HeatmapSpec", "nms_window must be odd and >= 3"));
        }
        Ok(())
    }
}

/// A decoded heatmap peak with sub-pixel position and score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

impl Peak {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Render the two-channel ground-truth endpoint heatmap (channel 0 =
/// left endpoints, channel 1 = right).
///
/// Each endpoint draws a unit-peak Gaussian centered on its nearest
/// pixel (clipped into the image); overlapping kernels combine by max,
/// so values never exceed 1.
pub fn render_gt_heatmap(
    objects: &[AnnotatedObject],
    spec: &HeatmapSpec,
    size: (usize, usize),
) -> Grid2D {
    let (w, h) = size;
    let mut heatmap = Grid2D::new(w, h, 2);
    let radius = (4.0 * spec.sigma).ceil() as isize;
    let s2 = 2.0 * spec.sigma * spec.sigma;

    for obj in objects {
        for (channel, p) in [(0, obj.endpoints.left), (1, obj.endpoints.right)] {
            let px = (p.x.round() as isize).clamp(0, w as isize - 1);
            let py = (p.y.round() as isize).clamp(0, h as isize - 1);
            let x0 = (px - radius).max(0);
            let x1 = (px + radius).min(w as isize - 1);
            let y0 = (py - radius).max(0);
            let y1 = (py + radius).min(h as isize - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let dx = (x - px) as f64;
                    let dy = (y - py) as f64;
                    let v = (-(dx * dx + dy * dy) / s2).exp();
                    let cur = heatmap.get(x as usize, y as usize, channel);
                    if v > cur {
                        heatmap.set(x as usize, y as usize, channel, v);
                    }
                }
            }
        }
    }
    heatmap
}

/// Extract local-maximum peaks from a two-channel heatmap.
///
/// A pixel is a peak iff it is at least the maximum of its
/// `nms_window`-neighborhood, beating equal values by scan order, and
/// its value is >= `peak_threshold`. Peaks get sub-pixel refinement by
/// 3×3 intensity centroid (skipped at the image border), clamped to
/// ±0.5 pixels. Returns (left_channel_peaks, right_channel_peaks),
/// each sorted by descending score and truncated to `max_peaks`.
pub fn extract_peaks(heatmap: &Grid2D, spec: &HeatmapSpec) -> Result<(Vec<Peak>, Vec<Peak>)> {
    spec.validate()?;
    if heatmap.channels() != 2 {
        return Err(Error::DimMismatch(format!(
            "endpoint heatmap must have 2 channels, got {}",
            heatmap.channels()
        )));
    }
    let left = channel_peaks(heatmap, 0, spec);
    let right = channel_peaks(heatmap, 1, spec);
    Ok((left, right))
}

fn channel_peaks(heatmap: &Grid2D, channel: usize, spec: &HeatmapSpec) -> Vec<Peak> {
    let (w, h) = (heatmap.width(), heatmap.height());
    let half = (spec.nms_window / 2) as isize;
    let mut peaks: Vec<(usize, usize, f64)> = Vec::new();

    for y in 0..h {
        'pixels: for x in 0..w {
            let v = heatmap.get(x, y, channel);
            if v < spec.peak_threshold {
                continue;
            }
            let x0 = (x as isize - half).max(0) as usize;
            let x1 = ((x as isize + half).min(w as isize - 1)) as usize;
            let y0 = (y as isize - half).max(0) as usize;
            let y1 = ((y as isize + half).min(h as isize - 1)) as usize;
            for qy in y0..=y1 {
                for qx in x0..=x1 {
                    if qx == x && qy == y {
                        continue;
                    }
                    let q = heatmap.get(qx, qy, channel);
                    // Equal values resolve by scan order so plateaus
                    // yield exactly one peak.
                    if q > v || (q == v && (qy, qx) < (y, x)) {
                        continue 'pixels;
                    }
                }
            }
            peaks.push((x, y, v));
        }
    }

    peaks.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then((a.1, a.0).cmp(&(b.1, b.0))));
    peaks.truncate(spec.max_peaks);

    peaks
        .into_iter()
        .map(|(x, y, v)| {
            let (dx, dy) = refine_centroid(heatmap, channel, x, y);
            Peak {
                x: x as f64 + dx,
                y: y as f64 + dy,
                score: v,
            }
        })
        .collect()
}

/// 3×3 intensity centroid offset around a peak pixel. Returns (0, 0)
/// when the window would leave the image.
fn refine_centroid(heatmap: &Grid2D, channel: usize, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = (heatmap.width(), heatmap.height());
    if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
        return (0.0, 0.0);
    }
    let mut sum = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let v = heatmap
                .get((x as i64 + dx) as usize, (y as i64 + dy) as usize, channel)
                .max(0.0);
            sum += v;
            sx += v * dx as f64;
            sy += v * dy as f64;
        }
    }
    if sum <= 0.0 {
        return (0.0, 0.0);
    }
    ((sx / sum).clamp(-0.5, 0.5), (sy / sum).clamp(-0.5, 0.5))
}

fn sample_embedding(grid: &Grid2D, p: Point) -> Vec<f64> {
    let x = (p.x.round() as isize).clamp(0, grid.width() as isize - 1) as usize;
    let y = (p.y.round() as isize).clamp(0, grid.height() as isize - 1) as usize;
    (0..grid.channels()).map(|c| grid.get(x, y, c)).collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn build_detections(
    left: &[Peak],
    right: &[Peak],
    left_embeddings: &[Vec<f64>],
    right_embeddings: &[Vec<f64>],
    pairs: &[(usize, usize)],
) -> Vec<Detection> {
    let mut detections: Vec<Detection> = pairs
        .iter()
        .map(|&(i, j)| {
            let (lp, rp) = (left[i].point(), right[j].point());
            let score = ((left[i].score + right[j].score) / 2.0).clamp(0.0, 1.0);
            // Keep the embedding attached to the geometric side it
            // belongs to, even if the decoded points swap.
            let (endpoints, emb_l, emb_r) = if endpoint_is_left(lp, rp) {
                (
                    EndpointPair::raw(lp, rp),
                    left_embeddings[i].clone(),
                    right_embeddings[j].clone(),
                )
            } else {
                (
                    EndpointPair::raw(rp, lp),
                    right_embeddings[j].clone(),
                    left_embeddings[i].clone(),
                )
            };
            Detection::new(endpoints, score)
                .expect("score clamped to [0,1]")
                .with_embeddings(emb_l, emb_r)
                .expect("equal dims by construction")
        })
        .collect();
    detections.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    detections
}

/// Pair left and right peaks through embedding similarity (L1 distance
/// between the embedding vectors sampled at the peak locations), greedy
/// nearest-neighbor in ascending distance. Pairs with distance above
/// `gate` are rejected. Result is ordered by combined heatmap score.
pub fn pair_endpoints(
    left: &[Peak],
    right: &[Peak],
    emb_left: &Grid2D,
    emb_right: &Grid2D,
    gate: f64,
) -> Result<Vec<Detection>> {
    let (le, re, dist) = embedding_distances(left, right, emb_left, emb_right)?;
    let pairs = greedy_min_matching(&dist, gate);
    Ok(build_detections(left, right, &le, &re, &pairs))
}

/// Optimal-assignment variant of [`pair_endpoints`] (ablation option):
/// minimizes total embedding distance under the same gate.
pub fn pair_endpoints_optimal(
    left: &[Peak],
    right: &[Peak],
    emb_left: &Grid2D,
    emb_right: &Grid2D,
    gate: f64,
) -> Result<Vec<Detection>> {
    let (le, re, dist) = embedding_distances(left, right, emb_left, emb_right)?;
    let pairs = min_cost_matching_gated(&dist, gate);
    Ok(build_detections(left, right, &le, &re, &pairs))
}

#[allow(clippy::type_complexity)]
fn embedding_distances(
    left: &[Peak],
    right: &[Peak],
    emb_left: &Grid2D,
    emb_right: &Grid2D,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if !emb_left.same_shape(emb_right) {
        return Err(Error::DimMismatch(format!(
            "embedding grids differ: {}x{}x{} vs {}x{}x{}",
            emb_left.width(),
            emb_left.height(),
            emb_left.channels(),
            emb_right.width(),
            emb_right.height(),
            emb_right.channels()
        )));
    }
    let le: Vec<Vec<f64>> = left.iter().map(|p| sample_embedding(emb_left, p.point())).collect();
    let re: Vec<Vec<f64>> = right
        .iter()
        .map(|p| sample_embedding(emb_right, p.point()))
        .collect();
    let dist: Vec<Vec<f64>> = le
        .iter()
        .map(|el| re.iter().map(|er| l1(el, er)).collect())
        .collect();
    Ok((le, re, dist))
}

/// Per-element product of a feature grid with a single-channel mask,
/// broadcast over channels.
pub fn mask_gate(features: &Grid2D, mask: &Grid2D) -> Result<Grid2D> {
    if mask.channels() != 1 {
        return Err(Error::DimMismatch(format!(
            "mask must be single-channel, got C={}",
            mask.channels()
        )));
    }
    if !features.same_plane(mask) {
        return Err(Error::DimMismatch(format!(
            "feature grid {}x{} vs mask {}x{}",
            features.width(),
            features.height(),
            mask.width(),
            mask.height()
        )));
    }
    let mut out = features.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            let m = mask.get(x, y, 0);
            for c in 0..out.channels() {
                out.set(x, y, c, m * features.get(x, y, c));
            }
        }
    }
    Ok(out)
}

/// Corruption model for the oracle detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleNoise {
    /// Gaussian std of per-coordinate endpoint jitter, pixels.
    pub endpoint_jitter_std: f64,
    /// Probability of dropping each ground-truth object.
    pub drop_prob: f64,
    /// Expected spurious detections per frame (Poisson).
    pub false_positive_rate: f64,
}

impl Default for OracleNoise {
    fn default() -> Self {
        OracleNoise {
            endpoint_jitter_std: 0.0,
            drop_prob: 0.0,
            false_positive_rate: 0.0,
        }
    }
}

impl OracleNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.endpoint_jitter_std >= 0.0) {
            return Err(Error::invalid("OracleNoise", "jitter std must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::invalid("OracleNoise", "drop_prob must be in [0, 1]"));
        }
        if !(self.false_positive_rate >= 0.0) {
            return Err(Error::invalid(
                "OracleNoise",
                "false_positive_rate must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Tally of oracle decisions, for dropout accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleLog {
    pub kept: usize,
    pub dropped: usize,
    pub false_positives: usize,
}

/// Emit ground-truth-derived detections with controlled corruption:
/// endpoints jittered by Gaussian noise, objects dropped with
/// `drop_prob`, and Poisson-distributed spurious detections appended.
/// When `with_offsets` is set, the true per-frame displacement of the
/// object is attached to both endpoints (spurious detections get zero
/// offsets).
pub fn oracle_detect(
    objects: &[AnnotatedObject],
    noise: &OracleNoise,
    with_offsets: bool,
    image_size: (usize, usize),
    rng: &mut impl Rng,
) -> Result<Vec<Detection>> {
    let mut log = OracleLog::default();
    oracle_detect_with_log(objects, noise, with_offsets, image_size, rng, &mut log)
}

/// [`oracle_detect`], accumulating per-object decisions into `log`.
pub fn oracle_detect_with_log(
    objects: &[AnnotatedObject],
    noise: &OracleNoise,
    with_offsets: bool,
    image_size: (usize, usize),
    rng: &mut impl Rng,
    log: &mut OracleLog,
) -> Result<Vec<Detection>> {
    noise.validate()?;
    let jitter = if noise.endpoint_jitter_std > 0.0 {
        Some(Normal::new(0.0, noise.endpoint_jitter_std).expect("validated std"))
    } else {
        None
    };

    let mut detections = Vec::new();
    for obj in objects {
        if noise.drop_prob >= 1.0 || (noise.drop_prob > 0.0 && rng.random_bool(noise.drop_prob)) {
            log.dropped += 1;
            continue;
        }
        log.kept += 1;
        let mut left = obj.endpoints.left;
        let mut right = obj.endpoints.right;
        if let Some(n) = &jitter {
            left.x += n.sample(rng);
            left.y += n.sample(rng);
            right.x += n.sample(rng);
            right.y += n.sample(rng);
        }
        let mut det = Detection::new(EndpointPair::from_unordered(left, right), 1.0)?;
        if with_offsets {
            let v = obj.state.velocity();
            det = det.with_offsets(v, v);
        }
        detections.push(det);
    }

    if noise.false_positive_rate > 0.0 {
        let poisson = Poisson::new(noise.false_positive_rate)
            .map_err(|e| Error::invalid("OracleNoise", e.to_string()))?;
        let count = poisson.sample(rng) as usize;
        let (w, h) = image_size;
        for _ in 0..count {
            let a = Point::new(
                rng.random_range(0.0..=(w - 1) as f64),
                rng.random_range(0.0..=(h - 1) as f64),
            );
            let b = Point::new(
                rng.random_range(0.0..=(w - 1) as f64),
                rng.random_range(0.0..=(h - 1) as f64),
            );
            let mut det = Detection::new(EndpointPair::from_unordered(a, b), 1.0)?;
            if with_offsets {
                det = det.with_offsets(Point::new(0.0, 0.0), Point::new(0.0, 0.0));
            }
            detections.push(det);
            log.false_positives += 1;
        }
    }
    Ok(detections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DebrisState;
    use crate::sim::sequence_rng;
    use approx::assert_relative_eq;

    fn object(id: u64, cx: f64, cy: f64, l: f64, angle: f64, v: f64) -> AnnotatedObject {
        AnnotatedObject::from_state(
            id,
            DebrisState::new(Point::new(cx, cy), l, 1.0, angle, v).unwrap(),
        )
    }

    #[test]
    fn single_debris_renders_one_unit_peak_per_channel() {
        let spec = HeatmapSpec::default();
        let objs = vec![object(1, 32.0, 32.0, 20.0, 0.3, 0.0)];
        let hm = render_gt_heatmap(&objs, &spec, (64, 64));
        for channel in 0..2 {
            let mut unit = 0;
            for y in 0..64 {
                for x in 0..64 {
                    let v = hm.get(x, y, channel);
                    assert!(v <= 1.0 + 1e-12);
                    if v == 1.0 {
                        unit += 1;
                    }
                }
            }
            assert_eq!(unit, 1, "channel {channel} should have one unit peak");
        }
    }

    #[test]
    fn close_endpoints_combine_by_max() {
        let spec = HeatmapSpec::default();
        // Two objects whose left endpoints are one pixel apart.
        let objs = vec![
            object(1, 30.0, 30.0, 10.0, 0.0, 0.0),
            object(2, 30.0, 31.0, 10.0, 0.0, 0.0),
        ];
        let hm = render_gt_heatmap(&objs, &spec, (64, 64));
        for y in 0..64 {
            for x in 0..64 {
                assert!(hm.get(x, y, 0) <= 1.0 + 1e-12);
            }
        }
        // Both rounded endpoint pixels are unit peaks.
        assert_eq!(hm.get(25, 30, 0), 1.0);
        assert_eq!(hm.get(25, 31, 0), 1.0);
    }

    #[test]
    fn isolated_kernel_mass_matches_gaussian_integral() {
        let spec = HeatmapSpec::default();
        let objs = vec![object(1, 32.0, 32.0, 30.0, 0.0, 0.0)];
        let hm = render_gt_heatmap(&objs, &spec, (64, 64));
        let sum: f64 = (0..64)
            .flat_map(|y| (0..64).map(move |x| (x, y)))
            .map(|(x, y)| hm.get(x, y, 0))
            .sum();
        let expected = 2.0 * std::f64::consts::PI * spec.sigma * spec.sigma;
        assert_relative_eq!(sum, expected, max_relative = 1e-3);
    }

    #[test]
    fn decode_of_encode_recovers_peaks() {
        let spec = HeatmapSpec::default();
        let objs = vec![
            object(1, 20.0, 20.0, 16.0, 0.2, 0.0),
            object(2, 45.0, 40.0, 18.0, 1.2, 0.0),
            object(3, 20.0, 50.0, 14.0, 2.4, 0.0),
        ];
        let hm = render_gt_heatmap(&objs, &spec, (64, 64));
        let (left, right) = extract_peaks(&hm, &spec).unwrap();
        assert_eq!(left.len(), 3);
        assert_eq!(right.len(), 3);
        for obj in &objs {
            let l = obj.endpoints.left;
            let best = left
                .iter()
                .map(|p| (p.x - l.x).abs().max((p.y - l.y).abs()))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 0.5, "left endpoint error {best} > 0.5 px");
            let r = obj.endpoints.right;
            let best = right
                .iter()
                .map(|p| (p.x - r.x).abs().max((p.y - r.y).abs()))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 0.5, "right endpoint error {best} > 0.5 px");
        }
    }

    #[test]
    fn flat_zero_heatmap_has_no_peaks() {
        let hm = Grid2D::new(32, 32, 2);
        let (left, right) = extract_peaks(&hm, &HeatmapSpec::default()).unwrap();
        assert!(left.is_empty() && right.is_empty());
    }

    #[test]
    fn nearby_gaussians_merge_into_one_peak() {
        // Two equal kernels 2 px apart inside a 5-px window: the NMS
        // resolution limit yields a single surviving peak.
        let spec = HeatmapSpec::default();
        let mut hm = Grid2D::new(32, 32, 2);
        let s2 = 2.0 * spec.sigma * spec.sigma;
        for &(cx, cy) in &[(15.0f64, 15.0f64), (17.0, 15.0)] {
            for y in 0..32 {
                for x in 0..32 {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    let v = (-d2 / s2).exp();
                    if v > hm.get(x, y, 0) {
                        hm.set(x, y, 0, v);
                    }
                }
            }
        }
        let (left, _) = extract_peaks(&hm, &spec).unwrap();
        assert_eq!(left.len(), 1, "expected one merged peak");
    }

    #[test]
    fn peak_count_respects_max_and_threshold_monotonicity() {
        let spec = HeatmapSpec::default();
        let objs: Vec<AnnotatedObject> = (0..5)
            .map(|i| object(i + 1, 10.0 + 10.0 * i as f64, 10.0 + 9.0 * i as f64, 8.0, 0.9, 0.0))
            .collect();
        let hm = render_gt_heatmap(&objs, &spec, (96, 96));
        let capped = HeatmapSpec {
            max_peaks: 2,
            ..spec.clone()
        };
        let (left, right) = extract_peaks(&hm, &capped).unwrap();
        assert!(left.len() <= 2 && right.len() <= 2);

        let mut last = usize::MAX;
        for threshold in [0.1, 0.3, 0.5, 0.7, 0.99] {
            let s = HeatmapSpec {
                peak_threshold: threshold,
                ..spec.clone()
            };
            let (left, _) = extract_peaks(&hm, &s).unwrap();
            assert!(left.len() <= last, "peak count must not grow with threshold");
            last = left.len();
        }
    }

    fn constant_embedding_maps(
        objs: &[AnnotatedObject],
        dims: usize,
        size: (usize, usize),
    ) -> (Grid2D, Grid2D) {
        // Paint each object's embedding vector in a 3x3 patch around its
        // endpoint pixels: object k gets the vector [3k, 3k, ...].
        let mut emb_l = Grid2D::new(size.0, size.1, dims);
        let mut emb_r = Grid2D::new(size.0, size.1, dims);
        for (k, obj) in objs.iter().enumerate() {
            for (grid, p) in [(&mut emb_l, obj.endpoints.left), (&mut emb_r, obj.endpoints.right)] {
                let px = p.x.round() as isize;
                let py = p.y.round() as isize;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let x = px + dx;
                        let y = py + dy;
                        if x >= 0 && y >= 0 && (x as usize) < size.0 && (y as usize) < size.1 {
                            for c in 0..dims {
                                grid.set(x as usize, y as usize, c, 3.0 * k as f64);
                            }
                        }
                    }
                }
            }
        }
        (emb_l, emb_r)
    }

    #[test]
    fn separable_embeddings_pair_correctly() {
        let spec = HeatmapSpec::default();
        let objs = vec![
            object(1, 20.0, 20.0, 16.0, 0.2, 0.0),
            object(2, 45.0, 40.0, 18.0, 1.2, 0.0),
            object(3, 20.0, 50.0, 14.0, 2.4, 0.0),
        ];
        let hm = render_gt_heatmap(&objs, &spec, (64, 64));
        let (left, right) = extract_peaks(&hm, &spec).unwrap();
        let (emb_l, emb_r) = constant_embedding_maps(&objs, 4, (64, 64));
        let dets = pair_endpoints(&left, &right, &emb_l, &emb_r, 1.0).unwrap();
        assert_eq!(dets.len(), 3);
        for det in &dets {
            // Each detection's endpoints must belong to the same object.
            let matched = objs.iter().any(|o| {
                det.endpoints.left.dist(o.endpoints.left) <= 1.0
                    && det.endpoints.right.dist(o.endpoints.right) <= 1.0
            });
            assert!(matched, "paired endpoints from different objects");
        }
    }

    #[test]
    fn single_pair_within_gate_always_pairs() {
        let left = vec![Peak {
            x: 5.0,
            y: 5.0,
            score: 1.0,
        }];
        let right = vec![Peak {
            x: 9.0,
            y: 5.0,
            score: 1.0,
        }];
        let emb = Grid2D::new(16, 16, 4);
        let dets = pair_endpoints(&left, &right, &emb, &emb, 1.0).unwrap();
        assert_eq!(dets.len(), 1);
        // Zero embeddings everywhere: distance 0 <= gate.
        let far = pair_endpoints(&left, &right, &emb, &emb, -1.0).unwrap();
        assert!(far.is_empty(), "gate below all distances rejects the pair");
    }

    #[test]
    fn greedy_matches_brute_force_under_margin() {
        // Random 4x4 embedding instances where per-pair margins dominate:
        // greedy equals the exhaustive min-sum matching.
        use rand::Rng;
        let mut rng = sequence_rng(33, 0);
        for _ in 0..50 {
            // True pair distance <= 0.2; all cross distances >= 1.0.
            let dist: Vec<Vec<f64>> = (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| {
                            if i == j {
                                rng.random_range(0.0..0.2)
                            } else {
                                rng.random_range(1.0..5.0)
                            }
                        })
                        .collect()
                })
                .collect();
            let greedy = greedy_min_matching(&dist, f64::INFINITY);
            // Brute force min-sum over all 4! permutations.
            let mut best = (f64::INFINITY, Vec::new());
            let perms = [
                [0, 1, 2, 3],
                [0, 1, 3, 2],
                [0, 2, 1, 3],
                [0, 2, 3, 1],
                [0, 3, 1, 2],
                [0, 3, 2, 1],
                [1, 0, 2, 3],
                [1, 0, 3, 2],
                [1, 2, 0, 3],
                [1, 2, 3, 0],
                [1, 3, 0, 2],
                [1, 3, 2, 0],
                [2, 0, 1, 3],
                [2, 0, 3, 1],
                [2, 1, 0, 3],
                [2, 1, 3, 0],
                [2, 3, 0, 1],
                [2, 3, 1, 0],
                [3, 0, 1, 2],
                [3, 0, 2, 1],
                [3, 1, 0, 2],
                [3, 1, 2, 0],
                [3, 2, 0, 1],
                [3, 2, 1, 0],
            ];
            for perm in perms {
                let total: f64 = perm.iter().enumerate().map(|(i, &j)| dist[i][j]).sum();
                if total < best.0 {
                    best = (total, perm.iter().enumerate().map(|(i, &j)| (i, j)).collect());
                }
            }
            assert_eq!(greedy, best.1);
        }
    }

    #[test]
    fn oracle_zero_noise_is_exact() {
        let objs = vec![object(1, 20.0, 20.0, 16.0, 0.4, 3.0)];
        let mut rng = sequence_rng(0, 0);
        let dets =
            oracle_detect(&objs, &OracleNoise::default(), true, (64, 64), &mut rng).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].endpoints, objs[0].endpoints);
        let v = objs[0].state.velocity();
        assert_eq!(dets[0].offset_left, Some(v));
        assert_eq!(dets[0].offset_right, Some(v));
    }

    #[test]
    fn oracle_drop_prob_one_yields_nothing() {
        let objs = vec![object(1, 20.0, 20.0, 16.0, 0.4, 3.0)];
        let noise = OracleNoise {
            drop_prob: 1.0,
            ..OracleNoise::default()
        };
        let mut rng = sequence_rng(0, 0);
        let dets = oracle_detect(&objs, &noise, false, (64, 64), &mut rng).unwrap();
        assert!(dets.is_empty());
    }

    #[test]
    fn oracle_drop_rate_is_calibrated() {
        let objs: Vec<AnnotatedObject> =
            (0..10_000).map(|i| object(i + 1, 30.0, 30.0, 10.0, 0.1, 1.0)).collect();
        let noise = OracleNoise {
            drop_prob: 0.3,
            ..OracleNoise::default()
        };
        let mut rng = sequence_rng(8, 0);
        let mut log = OracleLog::default();
        let dets =
            oracle_detect_with_log(&objs, &noise, false, (64, 64), &mut rng, &mut log).unwrap();
        let rate = log.dropped as f64 / objs.len() as f64;
        assert!((rate - 0.3).abs() <= 0.01, "drop rate {rate}");
        assert_eq!(log.kept, dets.len());
        assert_eq!(log.kept + log.dropped, objs.len());
    }

    #[test]
    fn mask_gate_identity_zero_and_oracle() {
        let mut features = Grid2D::new(8, 8, 3);
        let mut rng = sequence_rng(12, 0);
        for y in 0..8 {
            for x in 0..8 {
                for c in 0..3 {
                    features.set(x, y, c, rng.random_range(-2.0..2.0));
                }
            }
        }
        let mut ones = Grid2D::new(8, 8, 1);
        ones.map_inplace(|_| 1.0);
        assert_eq!(mask_gate(&features, &ones).unwrap(), features);

        let zeros = Grid2D::new(8, 8, 1);
        let gated = mask_gate(&features, &zeros).unwrap();
        assert!(gated.values().iter().all(|&v| v == 0.0));

        let mut mask = Grid2D::new(8, 8, 1);
        for y in 0..8 {
            for x in 0..8 {
                mask.set(x, y, 0, rng.random_range(0.0..1.0));
            }
        }
        let gated = mask_gate(&features, &mask).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                for c in 0..3 {
                    assert_eq!(gated.get(x, y, c), mask.get(x, y, 0) * features.get(x, y, c));
                }
            }
        }

        let bad = Grid2D::new(4, 8, 1);
        assert!(mask_gate(&features, &bad).is_err());
    }
}
