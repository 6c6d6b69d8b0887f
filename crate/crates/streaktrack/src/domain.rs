//! Core value types shared by every stage of the pipeline.
//!
//! Image coordinate convention: origin at the top-left, x grows rightward,
//! y grows downward, pixel centers sit at integer coordinates. Angles are
//! stored in radians in `[0, 2π)`; configuration files accept degrees and
//! convert on load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tie-break tolerance for deciding which endpoint of a near-vertical
/// streak counts as "left".
pub const VERTICAL_TIE_EPS: f64 = 1e-9;

/// A point or displacement in image coordinates (pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    /// Manhattan distance.
    pub fn l1_dist(self, other: Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    /// Euclidean distance.
    pub fn dist(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Per-frame parameters of one streak: center, dimensions, and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DebrisState {
    pub center: Point,
    /// Streak length in pixels (> 0).
    pub length: f64,
    /// Streak width in pixels (0 < width <= length).
    pub width: f64,
    /// Motion/orientation angle in radians, normalized to [0, 2π).
    pub angle: f64,
    /// Speed in pixels per frame (>= 0).
    pub speed: f64,
}

impl DebrisState {
    pub fn new(center: Point, length: f64, width: f64, angle: f64, speed: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::invalid("DebrisState", "length must be > 0"));
        }
        if !(width > 0.0) {
            return Err(Error::invalid("DebrisState", "width must be > 0"));
        }
        if width > length {
            return Err(Error::invalid("DebrisState", "width must be <= length"));
        }
        if !(speed >= 0.0) {
            return Err(Error::invalid("DebrisState", "speed must be >= 0"));
        }
        if !angle.is_finite() {
            return Err(Error::invalid("DebrisState", "angle must be finite"));
        }
        Ok(DebrisState {
            center,
            length,
            width,
            angle: normalize_angle(angle),
            speed,
        })
    }

    /// Unit vector along the streak axis.
    pub fn axis(&self) -> Point {
        Point::new(self.angle.cos(), self.angle.sin())
    }

    /// Unit vector normal to the streak axis.
    pub fn normal(&self) -> Point {
        Point::new(-self.angle.sin(), self.angle.cos())
    }

    /// Displacement covered in one frame interval.
    pub fn velocity(&self) -> Point {
        self.axis().scale(self.speed)
    }
}

/// Wrap an angle into [0, 2π).
pub fn normalize_angle(angle: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let a = angle.rem_euclid(two_pi);
    // rem_euclid can return 2π itself when the input is a tiny negative.
    if a >= two_pi {
        0.0
    } else {
        a
    }
}

/// The two extremities of a streak in canonical left/right order.
///
/// "Left" is the endpoint with the smaller x; for near-vertical streaks
/// (|Δx| < 1e-9) the endpoint with the smaller y is "left".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointPair {
    pub left: Point,
    pub right: Point,
}

impl EndpointPair {
    /// Order two endpoints canonically.
    pub fn from_unordered(a: Point, b: Point) -> Self {
        if endpoint_is_left(a, b) {
            EndpointPair { left: a, right: b }
        } else {
            EndpointPair { left: b, right: a }
        }
    }

    /// Construct without reordering. The caller asserts the left/right
    /// correspondence (used for derived previous-frame endpoints, where
    /// identity matters more than canonical order).
    pub fn raw(left: Point, right: Point) -> Self {
        EndpointPair { left, right }
    }

    pub fn midpoint(&self) -> Point {
        Point::new(
            (self.left.x + self.right.x) / 2.0,
            (self.left.y + self.right.y) / 2.0,
        )
    }

    pub fn length(&self) -> f64 {
        self.left.dist(self.right)
    }
}

/// True if `a` is the canonical "left" endpoint of the pair (a, b).
pub fn endpoint_is_left(a: Point, b: Point) -> bool {
    if (a.x - b.x).abs() < VERTICAL_TIE_EPS {
        a.y <= b.y
    } else {
        a.x < b.x
    }
}

/// Axis-aligned box, inclusive of its edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Bbox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Bbox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y_max - self.y_min).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersects(&self, other: &Bbox) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    /// Intersection-over-union with degenerate boxes treated as area 0.
    pub fn iou(&self, other: &Bbox) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Endpoints of a streak: center ± (length/2) along the axis, then ordered.
pub fn endpoints_from_state(s: &DebrisState) -> EndpointPair {
    let half = s.axis().scale(s.length / 2.0);
    EndpointPair::from_unordered(s.center.sub(half), s.center.add(half))
}

/// Tight axis-aligned hull of the rotated length×width rectangle.
pub fn bbox_from_state(s: &DebrisState) -> Bbox {
    let u = s.axis().scale(s.length / 2.0);
    let n = s.normal().scale(s.width / 2.0);
    let corners = [
        s.center.add(u).add(n),
        s.center.add(u).sub(n),
        s.center.sub(u).add(n),
        s.center.sub(u).sub(n),
    ];
    let mut b = Bbox::new(
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for c in corners {
        b.x_min = b.x_min.min(c.x);
        b.y_min = b.y_min.min(c.y);
        b.x_max = b.x_max.max(c.x);
        b.y_max = b.y_max.max(c.y);
    }
    b
}

/// A decoded streak in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub endpoints: EndpointPair,
    /// Confidence in [0, 1].
    pub score: f64,
    pub embedding_left: Option<Vec<f64>>,
    pub embedding_right: Option<Vec<f64>>,
    /// Predicted displacement of each endpoint since the previous frame.
    pub offset_left: Option<Point>,
    pub offset_right: Option<Point>,
}

impl Detection {
    pub fn new(endpoints: EndpointPair, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid("Detection", "score must be in [0, 1]"));
        }
        Ok(Detection {
            endpoints,
            score,
            embedding_left: None,
            embedding_right: None,
            offset_left: None,
            offset_right: None,
        })
    }

    pub fn with_offsets(mut self, left: Point, right: Point) -> Self {
        self.offset_left = Some(left);
        self.offset_right = Some(right);
        self
    }

    pub fn with_embeddings(mut self, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::DimMismatch(format!(
                "embedding dims differ: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        self.embedding_left = Some(left);
        self.embedding_right = Some(right);
        Ok(self)
    }
}

/// An identity-stamped sequence of detections across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    /// (frame_index, detection) with strictly increasing frame indices.
    pub entries: Vec<(usize, Detection)>,
}

impl Track {
    pub fn new(id: u64, entries: Vec<(usize, Detection)>) -> Result<Self> {
        if id == 0 {
            return Err(Error::invalid("Track", "id must be positive"));
        }
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "Track",
                    format!("frame indices not strictly increasing at frame {}", w[1].0),
                ));
            }
        }
        Ok(Track { id, entries })
    }

    pub fn first_frame(&self) -> Option<usize> {
        self.entries.first().map(|(f, _)| *f)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ground truth for one streak in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedObject {
    pub track_id: u64,
    pub state: DebrisState,
    pub endpoints: EndpointPair,
    pub bbox: Bbox,
}

impl AnnotatedObject {
    pub fn from_state(track_id: u64, state: DebrisState) -> Self {
        AnnotatedObject {
            track_id,
            endpoints: endpoints_from_state(&state),
            bbox: bbox_from_state(&state),
            state,
        }
    }
}

/// Ground-truth states, endpoints and boxes for all frames of one sequence.
///
/// Frame lists hold only the objects whose rectangle intersects the image
/// in that frame. Track ids are stable across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceAnnotation {
    /// Per-frame object lists; index 0 is frame 1.
    pub frames: Vec<Vec<AnnotatedObject>>,
    /// Optional per-frame binary masks (1 inside any streak rectangle).
    pub masks: Option<Vec<crate::grid::Grid2D>>,
}

impl SequenceAnnotation {
    pub fn new(frames: Vec<Vec<AnnotatedObject>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid(
                "SequenceAnnotation",
                "must cover at least one frame",
            ));
        }
        Ok(SequenceAnnotation {
            frames,
            masks: None,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Objects visible in 1-based frame `frame_idx`.
    pub fn objects(&self, frame_idx: usize) -> &[AnnotatedObject] {
        &self.frames[frame_idx - 1]
    }

    /// Total number of annotated object instances over all frames.
    pub fn total_objects(&self) -> usize {
        self.frames.iter().map(|f| f.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn state(cx: f64, cy: f64, l: f64, w: f64, angle: f64, v: f64) -> DebrisState {
        DebrisState::new(Point::new(cx, cy), l, w, angle, v).unwrap()
    }

    #[test]
    fn endpoints_axis_aligned() {
        let pair = endpoints_from_state(&state(10.0, 10.0, 6.0, 1.0, 0.0, 0.0));
        assert_relative_eq!(pair.left.x, 7.0, epsilon = 1e-12);
        assert_relative_eq!(pair.left.y, 10.0, epsilon = 1e-12);
        assert_relative_eq!(pair.right.x, 13.0, epsilon = 1e-12);
        assert_relative_eq!(pair.right.y, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn endpoints_vertical_tie_break() {
        let pair = endpoints_from_state(&state(0.0, 0.0, 2.0, 1.0, FRAC_PI_2, 0.0));
        // Smaller y is "left" when Δx vanishes.
        assert_relative_eq!(pair.left.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(pair.left.y, -1.0, epsilon = 1e-9);
        assert_relative_eq!(pair.right.y, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn endpoints_diagonal_45_degrees() {
        let pair = endpoints_from_state(&state(5.0, 5.0, 2.0 * SQRT_2, 1.0, FRAC_PI_4, 0.0));
        assert_relative_eq!(pair.left.x, 4.0, epsilon = 1e-12);
        assert_relative_eq!(pair.left.y, 4.0, epsilon = 1e-12);
        assert_relative_eq!(pair.right.x, 6.0, epsilon = 1e-12);
        assert_relative_eq!(pair.right.y, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn bbox_axis_aligned() {
        let b = bbox_from_state(&state(10.0, 10.0, 6.0, 2.0, 0.0, 0.0));
        assert_relative_eq!(b.x_min, 7.0, epsilon = 1e-12);
        assert_relative_eq!(b.y_min, 9.0, epsilon = 1e-12);
        assert_relative_eq!(b.x_max, 13.0, epsilon = 1e-12);
        assert_relative_eq!(b.y_max, 11.0, epsilon = 1e-12);
    }

    #[test]
    fn bbox_rotated_square() {
        let b = bbox_from_state(&state(0.0, 0.0, 2.0, 2.0, FRAC_PI_4, 0.0));
        assert_relative_eq!(b.x_min, -SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(b.y_min, -SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(b.x_max, SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(b.y_max, SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn bbox_hull_matches_sampled_interior_points() {
        // Independent check: dense-sample the rectangle interior and verify
        // the hull contains every sample and is tight up to the sampling step.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = state(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(2.0..30.0),
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..PI * 2.0),
                0.0,
            );
            let b = bbox_from_state(&s);
            // Pad by an ulp-scale epsilon: edge samples may land a
            // rounding error outside the float-exact hull.
            let padded = Bbox::new(b.x_min - 1e-9, b.y_min - 1e-9, b.x_max + 1e-9, b.y_max + 1e-9);
            let (u, n) = (s.axis(), s.normal());
            let steps = 60;
            let mut max_x = f64::NEG_INFINITY;
            let mut max_y = f64::NEG_INFINITY;
            let mut min_x = f64::INFINITY;
            let mut min_y = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = -s.length / 2.0 + s.length * i as f64 / steps as f64;
                    let c = -s.width / 2.0 + s.width * j as f64 / steps as f64;
                    let p = s.center.add(u.scale(a)).add(n.scale(c));
                    assert!(
                        padded.contains(p),
                        "hull must contain every interior sample point"
                    );
                    min_x = min_x.min(p.x);
                    min_y = min_y.min(p.y);
                    max_x = max_x.max(p.x);
                    max_y = max_y.max(p.y);
                }
            }
            // Tightness: corners are on the sampling lattice, so the sampled
            // extents must reach the hull exactly.
            assert_relative_eq!(b.x_min, min_x, epsilon = 1e-9);
            assert_relative_eq!(b.y_min, min_y, epsilon = 1e-9);
            assert_relative_eq!(b.x_max, max_x, epsilon = 1e-9);
            assert_relative_eq!(b.y_max, max_y, epsilon = 1e-9);
        }
    }

    #[test]
    fn bbox_contains_endpoints_and_center() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = state(
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(1.0..40.0),
                rng.random_range(0.1..1.0),
                rng.random_range(0.0..PI * 2.0),
                0.0,
            );
            let b = bbox_from_state(&s);
            let e = endpoints_from_state(&s);
            assert!(b.contains(e.left) && b.contains(e.right) && b.contains(s.center));
        }
    }

    #[test]
    fn midpoint_recovers_center_over_random_states() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let s = state(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
                rng.random_range(0.01..50.0),
                0.01,
                rng.random_range(-10.0..10.0),
                rng.random_range(0.0..5.0),
            );
            let pair = endpoints_from_state(&s);
            let mid = pair.midpoint();
            assert!(mid.dist(s.center) < 1e-9);
            assert!((pair.length() - s.length).abs() < 1e-9);
        }
    }

    #[test]
    fn state_validation() {
        assert!(DebrisState::new(Point::new(0.0, 0.0), 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(DebrisState::new(Point::new(0.0, 0.0), 5.0, 0.0, 0.0, 0.0).is_err());
        assert!(DebrisState::new(Point::new(0.0, 0.0), 2.0, 3.0, 0.0, 0.0).is_err());
        assert!(DebrisState::new(Point::new(0.0, 0.0), 5.0, 1.0, 0.0, -1.0).is_err());
        let s = DebrisState::new(Point::new(0.0, 0.0), 5.0, 1.0, -FRAC_PI_2, 0.0).unwrap();
        assert!(s.angle >= 0.0 && s.angle < std::f64::consts::TAU);
        assert_relative_eq!(s.angle, 1.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn detection_validation() {
        let pair = EndpointPair::from_unordered(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert!(Detection::new(pair, 1.5).is_err());
        let d = Detection::new(pair, 0.5).unwrap();
        assert!(d
            .clone()
            .with_embeddings(vec![1.0, 2.0], vec![1.0])
            .is_err());
        assert!(d.with_embeddings(vec![1.0, 2.0], vec![3.0, 4.0]).is_ok());
    }

    #[test]
    fn track_validation() {
        let pair = EndpointPair::from_unordered(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        let d = Detection::new(pair, 1.0).unwrap();
        assert!(Track::new(0, vec![]).is_err());
        assert!(Track::new(1, vec![(1, d.clone()), (1, d.clone())]).is_err());
        assert!(Track::new(1, vec![(1, d.clone()), (3, d)]).is_ok());
    }
}
