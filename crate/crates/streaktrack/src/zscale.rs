//! ZScale intensity normalization: maps raw astronomical pixel values
//! into the 8-bit display range using median ± k·std bounds and a linear
//! stretch clamped to [0, 255].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScaleParams {
    /// Scale factor on the standard deviation.
    pub k: f64,
}

impl Default for ZScaleParams {
    fn default() -> Self {
        ZScaleParams { k: 2.5 }
    }
}

impl ZScaleParams {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::invalid("ZScaleParams", "k must be > 0"));
        }
        Ok(ZScaleParams { k })
    }
}

/// Lower and upper intensity bounds of the stretch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScaleBounds {
    pub z1: f64,
    pub z2: f64,
}

/// Compute stretch bounds: z1 = median − k·std, z2 = median + k·std.
///
/// The standard deviation is the population standard deviation over all
/// pixels (no iterative sample rejection).
pub fn zscale_bounds(image: &Grid2D, params: &ZScaleParams) -> Result<ZScaleBounds> {
    if image.channels() != 1 {
        return Err(Error::DimMismatch(format!(
            "zscale expects a single-channel image, got C={}",
            image.channels()
        )));
    }
    let values = image.values();
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite pixels"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();

    Ok(ZScaleBounds {
        z1: median - params.k * std,
        z2: median + params.k * std,
    })
}

/// Linearly stretch [z1, z2] to [0, 255] and clamp. A degenerate image
/// with z1 == z2 maps uniformly to mid-scale 127.
pub fn zscale_apply(image: &Grid2D, bounds: &ZScaleBounds) -> Grid2D {
    let mut out = image.clone();
    if bounds.z2 == bounds.z1 {
        out.map_inplace(|_| 127.0);
        return out;
    }
    let span = bounds.z2 - bounds.z1;
    out.map_inplace(|v| (255.0 * (v - bounds.z1) / span).clamp(0.0, 255.0));
    out
}

/// Convenience: bounds + apply in one step.
pub fn zscale(image: &Grid2D, params: &ZScaleParams) -> Result<Grid2D> {
    let bounds = zscale_bounds(image, params)?;
    Ok(zscale_apply(image, &bounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_of(values: Vec<f64>) -> Grid2D {
        let n = values.len();
        Grid2D::from_vec(n, 1, 1, values).unwrap()
    }

    #[test]
    fn zero_variance_image() {
        let b = zscale_bounds(&grid_of(vec![0.0; 4]), &ZScaleParams::default()).unwrap();
        assert_eq!(b.z1, 0.0);
        assert_eq!(b.z2, 0.0);
    }

    #[test]
    fn five_pixel_hand_computed_bounds() {
        // {1,2,3,4,5}: median 3, population std sqrt(2).
        let b = zscale_bounds(
            &grid_of(vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            &ZScaleParams::default(),
        )
        .unwrap();
        let std = 2.0f64.sqrt();
        assert_relative_eq!(b.z1, 3.0 - 2.5 * std, epsilon = 1e-9);
        assert_relative_eq!(b.z2, 3.0 + 2.5 * std, epsilon = 1e-9);
    }

    #[test]
    fn single_pixel_degenerates_to_value() {
        let b = zscale_bounds(&grid_of(vec![10.0]), &ZScaleParams { k: 7.0 }).unwrap();
        assert_eq!(b.z1, 10.0);
        assert_eq!(b.z2, 10.0);
        let out = zscale_apply(&grid_of(vec![10.0]), &b);
        assert_eq!(out.values(), &[127.0]);
    }

    #[test]
    fn endpoint_and_midpoint_mapping() {
        let b = ZScaleBounds { z1: 10.0, z2: 20.0 };
        let out = zscale_apply(&grid_of(vec![10.0, 20.0, 15.0]), &b);
        assert_relative_eq!(out.values()[0], 0.0);
        assert_relative_eq!(out.values()[1], 255.0);
        assert_relative_eq!(out.values()[2], 127.5);
    }

    #[test]
    fn out_of_range_values_clamp() {
        let b = ZScaleBounds { z1: 10.0, z2: 20.0 };
        let out = zscale_apply(&grid_of(vec![-5.0, 9.9, 20.1, 1e9]), &b);
        assert_eq!(out.values()[0], 0.0);
        assert_eq!(out.values()[1], 0.0);
        assert_eq!(out.values()[2], 255.0);
        assert_eq!(out.values()[3], 255.0);
    }

    #[test]
    fn output_bounded_and_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..500).map(|_| rng.random_range(-1e4..1e4)).collect();
        let img = grid_of(values.clone());
        let out = zscale(&img, &ZScaleParams::default()).unwrap();
        for v in out.values() {
            assert!((0.0..=255.0).contains(v));
        }
        // Monotone: input order implies output order.
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        for w in idx.windows(2) {
            assert!(out.values()[w[0]] <= out.values()[w[1]]);
        }
    }

    #[test]
    fn affine_input_transform_preserves_rank_order() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let values: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1e3)).collect();
        let a = 3.7;
        let b = -42.0;
        let transformed: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let out1 = zscale(&grid_of(values.clone()), &ZScaleParams::default()).unwrap();
        let out2 = zscale(&grid_of(transformed), &ZScaleParams::default()).unwrap();
        for i in 0..values.len() {
            for j in 0..values.len() {
                let ord1 = out1.values()[i].partial_cmp(&out1.values()[j]).unwrap();
                let ord2 = out2.values()[i].partial_cmp(&out2.values()[j]).unwrap();
                // Clamping may collapse strict order to equality but must
                // never reverse it.
                if ord1 != ord2 {
                    assert!(
                        ord1 == std::cmp::Ordering::Equal || ord2 == std::cmp::Ordering::Equal,
                        "rank order reversed"
                    );
                }
            }
        }
    }
}
