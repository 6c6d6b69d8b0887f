//! Dense row-major 2D grid with an arbitrary channel count.
//!
//! Carries image frames (C=1), endpoint heatmaps (C=2), embedding maps
//! (C=C2) and offset maps (C=2) through the pipeline. Values are `f64`
//! internally; the on-disk tensor container narrows to `f32`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Grid2D {
    /// Zero-filled grid. Dimensions must all be non-zero.
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        assert!(
            width > 0 && height > 0 && channels > 0,
            "grid dimensions must be non-zero"
        );
        Grid2D {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// Build from raw row-major data, validating length and finiteness.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::invalid("grid", "dimensions must be non-zero"));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(
                "grid",
                format!(
                    "expected {} values for {}x{}x{}, got {}",
                    width * height * channels,
                    width,
                    height,
                    channels,
                    data.len()
                ),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let c = pos % channels;
            let x = (pos / channels) % width;
            let y = pos / (channels * width);
            return Err(Error::invalid(
                "grid",
                format!("non-finite value at ({x}, {y}, {c})"),
            ));
        }
        Ok(Grid2D {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.idx(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.idx(x, y, c);
        self.data[i] = v;
    }

    #[inline]
    pub fn add(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.idx(x, y, c);
        self.data[i] += v;
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn same_plane(&self, other: &Grid2D) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Apply `f` to every value in place.
    pub fn map_inplace(&mut self, mut f: impl FnMut(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Extract one channel as a C=1 grid.
    pub fn channel(&self, c: usize) -> Grid2D {
        assert!(c < self.channels);
        let mut out = Grid2D::new(self.width, self.height, 1);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, 0, self.get(x, y, c));
            }
        }
        out
    }
}
