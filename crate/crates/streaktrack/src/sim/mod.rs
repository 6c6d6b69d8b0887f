//! Streak-debris video simulation: samples per-debris parameters,
//! propagates constant-velocity motion, rasterizes rotated rectangles
//! with brightness noise, applies Gaussian PSF blur and random fracture,
//! and emits frames plus ground-truth annotations.

mod background;
mod raster;

pub use background::{synth_background, synth_background_raw};
pub use raster::{apply_fracture, apply_psf, gaussian_psf_value, paint_mask, rasterize_debris};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::domain::{
    bbox_from_state, AnnotatedObject, Bbox, DebrisState, Point, SequenceAnnotation,
};
use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Seedable, portable RNG used everywhere randomness is needed.
pub type StreamRng = rand_chacha::ChaCha8Rng;

/// Independent RNG stream for one sequence: the master seed selects the
/// key, the sequence index selects the ChaCha stream. Sequence `i` is
/// reproducible regardless of generation order.
pub fn sequence_rng(seed: u64, sequence_index: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(sequence_index);
    rng
}

/// Gaussian point-spread-function parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfParams {
    /// Total kernel mass: the blur conserves `scale` × input flux.
    pub scale: f64,
    /// Diffusion standard deviation in pixels.
    pub sigma: f64,
}

impl PsfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::invalid("PsfParams", "scale must be > 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("PsfParams", "sigma must be > 0"));
        }
        Ok(())
    }

    /// Kernel truncation radius in pixels.
    pub fn radius(&self) -> usize {
        (3.0 * self.sigma).ceil() as usize
    }
}

/// Synthetic sky background: base level, read noise, and star blobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundParams {
    pub base_level: f64,
    pub noise_std: f64,
    pub star_count_range: (u32, u32),
    pub star_sigma_range: (f64, f64),
    pub star_brightness_range: (f64, f64),
}

impl Default for BackgroundParams {
    fn default() -> Self {
        BackgroundParams {
            base_level: 800.0,
            noise_std: 25.0,
            star_count_range: (15, 50),
            star_sigma_range: (0.8, 2.2),
            star_brightness_range: (150.0, 2500.0),
        }
    }
}

/// Full simulation configuration for one dataset split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Frame dimensions (width, height) in pixels.
    pub image_size: (usize, usize),
    /// Per-sequence frame count is sampled uniformly from this range.
    pub frames_range: (u32, u32),
    /// Per-sequence debris count K is sampled uniformly from this range.
    pub debris_count_range: (u32, u32),
    pub length_range: (f64, f64),
    pub width_range: (f64, f64),
    /// Pixels per frame.
    pub speed_range: (f64, f64),
    /// Radians. Config files accept degrees and convert on load.
    pub angle_range: (f64, f64),
    /// Mean added intensity of streak pixels (8-bit scale).
    pub brightness_mean: f64,
    /// Per-pixel uniform brightness noise amplitude (± this value).
    pub brightness_jitter: f64,
    /// Gaussian blur of the streak layer; `None` disables it.
    pub psf: Option<PsfParams>,
    /// Probability that a streak is fractured in a given frame.
    pub fracture_prob: f64,
    /// Gap length range in pixels (capped at length/2 when applied).
    pub fracture_gap_range: (f64, f64),
    /// Resample a sequence until every frame shows at least this many
    /// streaks (0 disables the constraint).
    pub min_visible_per_frame: u32,
    /// Emit per-frame binary masks alongside the annotation.
    pub emit_masks: bool,
    pub background: BackgroundParams,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::debris_preset()
    }
}

impl SimConfig {
    /// Sparse split: at most two streaks per frame.
    pub fn debris_preset() -> Self {
        SimConfig {
            image_size: (256, 256),
            frames_range: (2, 6),
            debris_count_range: (1, 2),
            length_range: (12.0, 40.0),
            width_range: (2.0, 3.5),
            speed_range: (3.0, 12.0),
            angle_range: (0.0, std::f64::consts::TAU),
            brightness_mean: 210.0,
            brightness_jitter: 20.0,
            psf: Some(PsfParams {
                scale: 1.0,
                sigma: 1.5,
            }),
            fracture_prob: 0.25,
            fracture_gap_range: (2.0, 6.0),
            min_visible_per_frame: 1,
            emit_masks: false,
            background: BackgroundParams::default(),
            rng_seed: 0,
        }
    }

    /// Crowded split: one to five streaks per frame.
    pub fn dense_preset() -> Self {
        SimConfig {
            debris_count_range: (1, 5),
            ..SimConfig::debris_preset()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn range_ok(what: &'static str, r: (f64, f64)) -> Result<()> {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
                return Err(Error::invalid(
                    what,
                    format!("range ({}, {}) must satisfy min <= max", r.0, r.1),
                ));
            }
            Ok(())
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(Error::invalid("image_size", "must be non-zero"));
        }
        if self.frames_range.0 < 1 || self.frames_range.0 > self.frames_range.1 {
            return Err(Error::invalid(
                "frames_range",
                "must satisfy 1 <= min <= max",
            ));
        }
        if self.debris_count_range.0 > self.debris_count_range.1 {
            return Err(Error::invalid("debris_count_range", "min must be <= max"));
        }
        range_ok("length_range", self.length_range)?;
        range_ok("width_range", self.width_range)?;
        range_ok("speed_range", self.speed_range)?;
        range_ok("angle_range", self.angle_range)?;
        range_ok("fracture_gap_range", self.fracture_gap_range)?;
        if !(self.length_range.0 > 0.0) {
            return Err(Error::invalid("length_range", "lengths must be > 0"));
        }
        if !(self.width_range.0 > 0.0) {
            return Err(Error::invalid("width_range", "widths must be > 0"));
        }
        if !(self.speed_range.0 >= 0.0) {
            return Err(Error::invalid("speed_range", "speeds must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.fracture_prob) {
            return Err(Error::invalid("fracture_prob", "must be in [0, 1]"));
        }
        if let Some(psf) = &self.psf {
            psf.validate()?;
        }
        Ok(())
    }
}

/// Continuous image region covered by the pixel grid (pixel centers at
/// integer coordinates, each pixel owning a unit square).
pub fn image_rect(size: (usize, usize)) -> Bbox {
    Bbox::new(-0.5, -0.5, size.0 as f64 - 0.5, size.1 as f64 - 0.5)
}

/// Sample the six parameters of a first-frame streak state.
///
/// Draw order is fixed (x, y, length, width, angle, speed) so that a
/// given RNG state always yields the same state. The sampled width is
/// capped at the sampled length.
pub fn sample_initial_state(cfg: &SimConfig, rng: &mut impl Rng) -> DebrisState {
    let (w, h) = cfg.image_size;
    let x = rng.random_range(0.0..=(w - 1) as f64);
    let y = rng.random_range(0.0..=(h - 1) as f64);
    let length = rng.random_range(cfg.length_range.0..=cfg.length_range.1);
    let width = rng
        .random_range(cfg.width_range.0..=cfg.width_range.1)
        .min(length);
    let angle = rng.random_range(cfg.angle_range.0..=cfg.angle_range.1);
    let speed = rng.random_range(cfg.speed_range.0..=cfg.speed_range.1);
    DebrisState::new(Point::new(x, y), length, width, angle, speed)
        .expect("sampled state is valid by construction")
}

/// Advance a state by `dt` frame intervals of constant-velocity motion.
pub fn propagate(s: &DebrisState, dt: f64) -> DebrisState {
    DebrisState {
        center: s.center.add(s.velocity().scale(dt)),
        ..*s
    }
}

/// States for frames 1..=frames, each derived from the first-frame state.
pub fn generate_trajectory(s1: &DebrisState, frames: usize) -> Vec<DebrisState> {
    assert!(frames >= 1, "a trajectory covers at least one frame");
    (0..frames).map(|t| propagate(s1, t as f64)).collect()
}

/// Simulate one sequence on a prepared (already normalized) background.
///
/// The RNG stream is derived from `cfg.rng_seed` and `sequence_index`,
/// so output is bit-identical across runs for the same inputs.
pub fn simulate_sequence(
    background: &Grid2D,
    cfg: &SimConfig,
    sequence_index: u64,
) -> Result<(Vec<Grid2D>, SequenceAnnotation)> {
    let mut rng = sequence_rng(cfg.rng_seed, sequence_index);
    simulate_with_rng(background, cfg, &mut rng)
}

/// Simulate one sequence, fully synthesizing the background from
/// `cfg.background` on the same per-sequence RNG stream.
pub fn generate_sequence(
    cfg: &SimConfig,
    sequence_index: u64,
) -> Result<(Vec<Grid2D>, SequenceAnnotation)> {
    cfg.validate()?;
    let mut rng = sequence_rng(cfg.rng_seed, sequence_index);
    let background = synth_background(&cfg.background, cfg.image_size, &mut rng)?;
    simulate_with_rng(&background, cfg, &mut rng)
}

const MAX_RESAMPLE_ATTEMPTS: usize = 100;

pub(crate) fn simulate_with_rng(
    background: &Grid2D,
    cfg: &SimConfig,
    rng: &mut StreamRng,
) -> Result<(Vec<Grid2D>, SequenceAnnotation)> {
    cfg.validate()?;
    let (w, h) = cfg.image_size;
    if background.channels() != 1 {
        return Err(Error::DimMismatch(
            "background must be single-channel".into(),
        ));
    }
    if background.width() < w || background.height() < h {
        return Err(Error::invalid(
            "background",
            format!(
                "background {}x{} is smaller than configured image size {}x{}",
                background.width(),
                background.height(),
                w,
                h
            ),
        ));
    }
    let rect = image_rect(cfg.image_size);

    // Sample debris and frame count, resampling until the visibility
    // constraint holds.
    let mut chosen: Option<(usize, Vec<Vec<DebrisState>>, Vec<Vec<bool>>)> = None;
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let frames = rng.random_range(cfg.frames_range.0..=cfg.frames_range.1) as usize;
        let count = rng.random_range(cfg.debris_count_range.0..=cfg.debris_count_range.1) as usize;
        let trajectories: Vec<Vec<DebrisState>> = (0..count)
            .map(|_| generate_trajectory(&sample_initial_state(cfg, rng), frames))
            .collect();
        // visible[t][k]
        let visible: Vec<Vec<bool>> = (0..frames)
            .map(|t| {
                trajectories
                    .iter()
                    .map(|traj| bbox_from_state(&traj[t]).intersects(&rect))
                    .collect()
            })
            .collect();
        let ok = cfg.min_visible_per_frame == 0
            || visible
                .iter()
                .all(|v| v.iter().filter(|&&b| b).count() >= cfg.min_visible_per_frame as usize);
        if ok {
            chosen = Some((frames, trajectories, visible));
            break;
        }
    }
    let (frames, trajectories, visible) = chosen.ok_or_else(|| {
        Error::invalid(
            "SimConfig",
            format!(
                "could not satisfy min_visible_per_frame={} in {} attempts",
                cfg.min_visible_per_frame, MAX_RESAMPLE_ATTEMPTS
            ),
        )
    })?;

    let mut out_frames = Vec::with_capacity(frames);
    let mut ann_frames = Vec::with_capacity(frames);
    let mut masks = if cfg.emit_masks {
        Some(Vec::with_capacity(frames))
    } else {
        None
    };

    for t in 0..frames {
        let mut layer = Grid2D::new(w, h, 1);
        for (k, traj) in trajectories.iter().enumerate() {
            if visible[t][k] {
                rasterize_debris(
                    &mut layer,
                    &traj[t],
                    cfg.brightness_mean,
                    cfg.brightness_jitter,
                    rng,
                );
            }
        }
        if let Some(psf) = &cfg.psf {
            layer = apply_psf(&layer, psf);
        }
        if cfg.fracture_prob > 0.0 {
            for (k, traj) in trajectories.iter().enumerate() {
                if visible[t][k] {
                    apply_fracture(&mut layer, &traj[t], cfg, rng);
                }
            }
        }

        // Composite onto the background and quantize to the 8-bit scale.
        let mut frame = Grid2D::new(w, h, 1);
        for y in 0..h {
            for x in 0..w {
                let v = background.get(x, y, 0) + layer.get(x, y, 0);
                frame.set(x, y, 0, v.clamp(0.0, 255.0).round());
            }
        }
        out_frames.push(frame);

        let mut ann = Vec::new();
        for (k, traj) in trajectories.iter().enumerate() {
            if visible[t][k] {
                ann.push(AnnotatedObject::from_state(k as u64 + 1, traj[t]));
            }
        }
        ann_frames.push(ann);

        if let Some(masks) = masks.as_mut() {
            let mut mask = Grid2D::new(w, h, 1);
            for (k, traj) in trajectories.iter().enumerate() {
                if visible[t][k] {
                    raster::paint_mask(&mut mask, &traj[t]);
                }
            }
            masks.push(mask);
        }
    }

    let mut ann = SequenceAnnotation::new(ann_frames)?;
    ann.masks = masks;
    Ok((out_frames, ann))
}

/// Fraction of annotated streak pixels whose frame value exceeds the
/// frame median by at least `margin`. Returns 1.0 when no streak pixels
/// exist.
pub fn debris_contrast_fraction(
    frames: &[Grid2D],
    ann: &SequenceAnnotation,
    margin: f64,
) -> f64 {
    let mut total = 0usize;
    let mut above = 0usize;
    for (t, frame) in frames.iter().enumerate() {
        let mut sorted = frame.values().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        for obj in ann.objects(t + 1) {
            let b = bbox_from_state(&obj.state);
            let x0 = (b.x_min.ceil().max(0.0)) as usize;
            let x1 = (b.x_max.floor().min(frame.width() as f64 - 1.0)) as usize;
            let y0 = (b.y_min.ceil().max(0.0)) as usize;
            let y1 = (b.y_max.floor().min(frame.height() as f64 - 1.0)) as usize;
            if b.x_min > frame.width() as f64 - 1.0 || b.y_min > frame.height() as f64 - 1.0 {
                continue;
            }
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if raster::point_in_streak(&obj.state, x as f64, y as f64) {
                        total += 1;
                        if frame.get(x, y, 0) >= median + margin {
                            above += 1;
                        }
                    }
                }
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        above as f64 / total as f64
    }
}
