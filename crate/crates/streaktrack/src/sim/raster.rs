//! Streak rasterization, Gaussian PSF convolution, and fracture gaps.

use rand::Rng;

use crate::domain::{bbox_from_state, DebrisState};
use crate::grid::Grid2D;

use super::{PsfParams, SimConfig};

/// True if the pixel center (x, y) lies inside the rotated rectangle of
/// `s` (edges inclusive).
pub(crate) fn point_in_streak(s: &DebrisState, x: f64, y: f64) -> bool {
    let rel_x = x - s.center.x;
    let rel_y = y - s.center.y;
    let u = s.axis();
    let n = s.normal();
    let axial = rel_x * u.x + rel_y * u.y;
    let normal = rel_x * n.x + rel_y * n.y;
    axial.abs() <= s.length / 2.0 && normal.abs() <= s.width / 2.0
}

/// Iterate pixel coordinates of the clipped bounding box of `s`.
fn clipped_pixel_bounds(
    s: &DebrisState,
    width: usize,
    height: usize,
) -> Option<(usize, usize, usize, usize)> {
    let b = bbox_from_state(s);
    let x0 = b.x_min.ceil().max(0.0);
    let y0 = b.y_min.ceil().max(0.0);
    let x1 = b.x_max.floor().min(width as f64 - 1.0);
    let y1 = b.y_max.floor().min(height as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return None;
    }
    Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
}

/// Raise every pixel inside the rotated rectangle by `brightness` plus a
/// per-pixel uniform jitter in ±`jitter`. Rectangles entirely outside the
/// canvas are skipped.
pub fn rasterize_debris(
    canvas: &mut Grid2D,
    s: &DebrisState,
    brightness: f64,
    jitter: f64,
    rng: &mut impl Rng,
) {
    let Some((x0, y0, x1, y1)) = clipped_pixel_bounds(s, canvas.width(), canvas.height()) else {
        return;
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            if point_in_streak(s, x as f64, y as f64) {
                let noise = if jitter > 0.0 {
                    rng.random_range(-jitter..=jitter)
                } else {
                    0.0
                };
                canvas.add(x, y, 0, brightness + noise);
            }
        }
    }
}

/// Mark every pixel inside the rotated rectangle with 1.0.
pub fn paint_mask(mask: &mut Grid2D, s: &DebrisState) {
    let Some((x0, y0, x1, y1)) = clipped_pixel_bounds(s, mask.width(), mask.height()) else {
        return;
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            if point_in_streak(s, x as f64, y as f64) {
                mask.set(x, y, 0, 1.0);
            }
        }
    }
}

/// Point-spread value of the isotropic Gaussian at displacement (dx, dy)
/// from the source center: scale / (2π σ²) · exp(−(dx² + dy²) / (2σ²)).
pub fn gaussian_psf_value(psf: &PsfParams, dx: f64, dy: f64) -> f64 {
    let s2 = psf.sigma * psf.sigma;
    psf.scale / (2.0 * std::f64::consts::PI * s2) * (-(dx * dx + dy * dy) / (2.0 * s2)).exp()
}

/// Convolve with the truncated Gaussian kernel, renormalized so the kernel
/// sums to `psf.scale` (interior flux is conserved up to that factor).
///
/// The kernel is truncated at radius ⌈3σ⌉ and applied separably with
/// zero padding outside the canvas.
pub fn apply_psf(canvas: &Grid2D, psf: &PsfParams) -> Grid2D {
    let radius = psf.radius() as isize;
    let s2 = psf.sigma * psf.sigma;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * s2)).exp())
        .collect();
    let norm: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / norm).collect();

    let (w, h, c) = (canvas.width(), canvas.height(), canvas.channels());
    // Horizontal pass.
    let mut tmp = Grid2D::new(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (i, wt) in weights.iter().enumerate() {
                    let sx = x as isize + i as isize - radius;
                    if sx >= 0 && (sx as usize) < w {
                        acc += wt * canvas.get(sx as usize, y, ch);
                    }
                }
                tmp.set(x, y, ch, acc);
            }
        }
    }
    // Vertical pass, multiplied by the total kernel mass.
    let mut out = Grid2D::new(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (i, wt) in weights.iter().enumerate() {
                    let sy = y as isize + i as isize - radius;
                    if sy >= 0 && (sy as usize) < h {
                        acc += wt * tmp.get(x, sy as usize, ch);
                    }
                }
                out.set(x, y, ch, acc * psf.scale);
            }
        }
    }
    out
}

/// With probability `cfg.fracture_prob`, zero an interior gap of the
/// streak back to the pre-rasterization background (the streak layer is
/// zero there). The gap length is sampled from `cfg.fracture_gap_range`
/// and capped at length/2; its position is uniform strictly inside the
/// segment so the endpoints survive. Ground-truth endpoints are not
/// affected — the object remains one streak with a gap.
pub fn apply_fracture(canvas: &mut Grid2D, s: &DebrisState, cfg: &SimConfig, rng: &mut impl Rng) {
    if cfg.fracture_prob <= 0.0 {
        return;
    }
    if cfg.fracture_prob < 1.0 && !rng.random_bool(cfg.fracture_prob) {
        return;
    }
    let gap = rng
        .random_range(cfg.fracture_gap_range.0..=cfg.fracture_gap_range.1)
        .min(s.length / 2.0);
    if gap <= 0.0 {
        return;
    }
    let half = gap / 2.0;
    let lo = -s.length / 2.0 + half;
    let hi = s.length / 2.0 - half;
    let pos = rng.random_range(lo..=hi);

    // Clear the full blurred width of the streak across the gap.
    let pad = cfg.psf.as_ref().map(|p| p.radius() as f64).unwrap_or(0.0);
    let u = s.axis();
    let n = s.normal();
    let half_normal = s.width / 2.0 + pad;
    let gap_center = s.center.add(u.scale(pos));

    let ext_x = u.x.abs() * half + n.x.abs() * half_normal;
    let ext_y = u.y.abs() * half + n.y.abs() * half_normal;
    let x0 = (gap_center.x - ext_x).ceil().max(0.0);
    let y0 = (gap_center.y - ext_y).ceil().max(0.0);
    let x1 = (gap_center.x + ext_x).floor().min(canvas.width() as f64 - 1.0);
    let y1 = (gap_center.y + ext_y).floor().min(canvas.height() as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    for y in y0 as usize..=y1 as usize {
        for x in x0 as usize..=x1 as usize {
            let rel_x = x as f64 - s.center.x;
            let rel_y = y as f64 - s.center.y;
            let axial = rel_x * u.x + rel_y * u.y;
            let normal = rel_x * n.x + rel_y * n.y;
            if (axial - pos).abs() <= half && normal.abs() <= half_normal {
                for ch in 0..canvas.channels() {
                    canvas.set(x, y, ch, 0.0);
                }
            }
        }
    }
}
