//! Binary tensor-map container: the bridge for external neural models
//! to hand heatmaps, embedding maps, and offset maps to the decoder.
//!
//! Layout (all integers little-endian u32):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TMAP"
//! 4       4     version (1)
//! 8       4     width W
//! 12      4     height H
//! 16      4     channels C
//! 20      4     dtype (0 = float32 little-endian)
//! 24      4·W·H·C  row-major payload, channel-interleaved:
//!               value(x, y, c) at index ((y·W + x)·C + c)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

pub const TENSOR_MAGIC: [u8; 4] = *b"TMAP";
pub const TENSOR_VERSION: u32 = 1;
pub const TENSOR_DTYPE_F32: u32 = 0;
const HEADER_LEN: usize = 24;

/// Write a grid as a float32 tensor map. Values must be representable
/// as finite `f32`.
pub fn write_tensor_map(grid: &Grid2D, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + grid.values().len() * 4);
    bytes.extend_from_slice(&TENSOR_MAGIC);
    bytes.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    bytes.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    bytes.extend_from_slice(&(grid.channels() as u32).to_le_bytes());
    bytes.extend_from_slice(&TENSOR_DTYPE_F32.to_le_bytes());
    for (i, &v) in grid.values().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            let c = i % grid.channels();
            let x = (i / grid.channels()) % grid.width();
            let y = i / (grid.channels() * grid.width());
            return Err(Error::invalid(
                "tensor map",
                format!("value at ({x}, {y}, {c}) is not representable as f32"),
            ));
        }
        bytes.extend_from_slice(&f.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a float32 tensor map, validating the header, the payload
/// length, and value finiteness.
pub fn read_tensor_map(path: &Path) -> Result<Grid2D> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;

    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, "file shorter than the 24-byte header"));
    }
    if bytes[0..4] != TENSOR_MAGIC {
        return Err(Error::format(path, "bad magic (expected \"TMAP\")"));
    }
    let field = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = field(4);
    if version != TENSOR_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version} (expected {TENSOR_VERSION})"),
        ));
    }
    let (w, h, c) = (field(8) as usize, field(12) as usize, field(16) as usize);
    let dtype = field(20);
    if dtype != TENSOR_DTYPE_F32 {
        return Err(Error::format(
            path,
            format!("unsupported dtype {dtype} (expected {TENSOR_DTYPE_F32} = float32)"),
        ));
    }
    if w == 0 || h == 0 || c == 0 {
        return Err(Error::format(path, "zero dimension in header"));
    }
    let expected = (w as u64) * (h as u64) * (c as u64) * 4;
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if expected != actual {
        return Err(Error::format(
            path,
            format!("payload length mismatch: header implies {expected} bytes, found {actual}"),
        ));
    }

    let mut values = Vec::with_capacity(w * h * c);
    for chunk in bytes[HEADER_LEN..].chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
    }
    Grid2D::from_vec(w, h, c, values).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn round_trip_is_exact_for_f32_values() {
        let dir = tmp();
        let path = dir.path().join("map.tmap");
        let mut rng = crate::sim::sequence_rng(3, 0);
        let values: Vec<f64> = (0..4 * 3 * 2)
            .map(|_| rng.random_range(-100.0f32..100.0) as f64)
            .collect();
        let grid = Grid2D::from_vec(4, 3, 2, values).unwrap();
        write_tensor_map(&grid, &path).unwrap();
        let back = read_tensor_map(&path).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn truncated_payload_is_reported() {
        let dir = tmp();
        let path = dir.path().join("map.tmap");
        let grid = Grid2D::new(4, 4, 1);
        write_tensor_map(&grid, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        let err = read_tensor_map(&path).unwrap_err();
        assert!(err.to_string().contains("payload length mismatch"));
    }

    #[test]
    fn bad_magic_is_reported() {
        let dir = tmp();
        let path = dir.path().join("map.tmap");
        std::fs::write(&path, b"NOPE0000000000000000000000000000").unwrap();
        let err = read_tensor_map(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn non_finite_payload_names_the_position() {
        let dir = tmp();
        let path = dir.path().join("map.tmap");
        let grid = Grid2D::new(3, 2, 2);
        write_tensor_map(&grid, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // Overwrite the value at (x=1, y=1, c=1) with NaN.
        let idx = 24 + ((1 * 3 + 1) * 2 + 1) * 4;
        bytes[idx..idx + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        let err = read_tensor_map(&path).unwrap_err();
        assert!(
            err.to_string().contains("non-finite value at (1, 1, 1)"),
            "{err}"
        );
    }

    #[test]
    fn fuzzed_mutations_never_panic() {
        let dir = tmp();
        let path = dir.path().join("map.tmap");
        let mutated = dir.path().join("mutated.tmap");
        let mut rng = crate::sim::sequence_rng(4, 0);
        let values: Vec<f64> = (0..8 * 8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grid = Grid2D::from_vec(8, 8, 1, values).unwrap();
        write_tensor_map(&grid, &path).unwrap();
        let original = std::fs::read(&path).unwrap();
        for _ in 0..500 {
            let mut bytes = original.clone();
            match rng.random_range(0..3) {
                0 => {
                    let i = rng.random_range(0..bytes.len());
                    bytes[i] = rng.random_range(0..=255);
                }
                1 => {
                    let cut = rng.random_range(0..bytes.len());
                    bytes.truncate(cut);
                }
                _ => {
                    let extra = rng.random_range(1..16);
                    bytes.extend(std::iter::repeat_n(0xAB, extra));
                }
            }
            std::fs::write(&mutated, &bytes).unwrap();
            // Structured result only; must not panic.
            let _ = read_tensor_map(&mutated);
        }
    }
}
