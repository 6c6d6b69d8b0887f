//! Synthetic sky backgrounds: base level, Gaussian read noise, and
//! Gaussian star blobs, normalized with ZScale for compositing.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::grid::Grid2D;
use crate::zscale::{zscale, ZScaleParams};

use super::BackgroundParams;

/// Raw (unnormalized) background in arbitrary intensity units.
///
/// Draw order is fixed: per-pixel noise row-major, then star count, then
/// per-star (x, y, sigma, amplitude).
pub fn synth_background_raw(
    params: &BackgroundParams,
    size: (usize, usize),
    rng: &mut impl Rng,
) -> Grid2D {
    let (w, h) = size;
    let mut g = Grid2D::new(w, h, 1);

    if params.noise_std > 0.0 {
        let noise = Normal::new(0.0, params.noise_std).expect("valid std");
        for y in 0..h {
            for x in 0..w {
                g.set(x, y, 0, params.base_level + noise.sample(rng));
            }
        }
    } else {
        g.map_inplace(|_| params.base_level);
    }

    let stars = rng.random_range(params.star_count_range.0..=params.star_count_range.1);
    for _ in 0..stars {
        let cx = rng.random_range(0.0..=(w - 1) as f64);
        let cy = rng.random_range(0.0..=(h - 1) as f64);
        let sigma = rng.random_range(params.star_sigma_range.0..=params.star_sigma_range.1);
        let amp =
            rng.random_range(params.star_brightness_range.0..=params.star_brightness_range.1);
        let radius = (4.0 * sigma).ceil() as isize;
        let x0 = (cx as isize - radius).max(0);
        let x1 = (cx as isize + radius).min(w as isize - 1);
        let y0 = (cy as isize - radius).max(0);
        let y1 = (cy as isize + radius).min(h as isize - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let v = amp * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                g.add(x as usize, y as usize, 0, v);
            }
        }
    }
    g
}

/// ZScale-normalized background ready for streak compositing.
pub fn synth_background(
    params: &BackgroundParams,
    size: (usize, usize),
    rng: &mut impl Rng,
) -> Result<Grid2D> {
    let raw = synth_background_raw(params, size, rng);
    zscale(&raw, &ZScaleParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::sequence_rng;

    #[test]
    fn background_is_deterministic_per_stream() {
        let params = BackgroundParams::default();
        let a = synth_background(&params, (64, 64), &mut sequence_rng(1, 5)).unwrap();
        let b = synth_background(&params, (64, 64), &mut sequence_rng(1, 5)).unwrap();
        assert_eq!(a, b);
        let c = synth_background(&params, (64, 64), &mut sequence_rng(1, 6)).unwrap();
        assert_ne!(a, c, "different streams should differ");
    }

    #[test]
    fn background_is_normalized_to_display_range() {
        let params = BackgroundParams::default();
        let bg = synth_background(&params, (64, 64), &mut sequence_rng(2, 0)).unwrap();
        for &v in bg.values() {
            assert!((0.0..=255.0).contains(&v));
        }
    }
}
