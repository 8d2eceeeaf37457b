//! File formats: lossless raw grids and 8-bit PNG renders.
//!
//! Raw grids use a little-endian layout: the 4-byte magic `CLD1`, a `u32`
//! side, then one or more `side * side` blocks of `f32` values in row-major
//! order.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Grid;

pub const RAW_MAGIC: &[u8; 4] = b"CLD1";
pub const RAW_HEADER_LEN: usize = 8;

pub fn encode_raw(grids: &[Grid]) -> Result<Vec<u8>> {
    let side = grids.first().map(Grid::side).ok_or(Error::InsufficientSamples {
        needed: 1,
        got: 0,
    })?;
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + grids.len() * side * side * 4);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(side as u32).to_le_bytes());
    for g in grids {
        g.check_side(side)?;
        for &v in g.values() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_raw(bytes: &[u8]) -> Result<Vec<Grid>> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            message: "truncated header".into(),
        });
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, expected CLD1".into(),
        });
    }
    let side = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if side == 0 {
        return Err(Error::Format {
            offset: 4,
            message: "zero side".into(),
        });
    }
    let block = side * side * 4;
    let body = &bytes[RAW_HEADER_LEN..];
    if body.is_empty() || body.len() % block != 0 {
        let complete = body.len() / block * block;
        return Err(Error::Format {
            offset: (RAW_HEADER_LEN + complete) as u64,
            message: format!("incomplete {side}x{side} float block"),
        });
    }
    body.chunks_exact(block)
        .enumerate()
        .map(|(n, chunk)| {
            let values: Vec<f64> = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect();
            Grid::from_vec(side, values).map_err(|e| Error::Format {
                offset: (RAW_HEADER_LEN + n * block) as u64,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_raw(path: &Path, grids: &[Grid]) -> Result<()> {
    let bytes = encode_raw(grids)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_raw(path: &Path) -> Result<Vec<Grid>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&bytes)
}

/// Affine map from grid values onto `[0, 255]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ByteMapping {
    pub min: f64,
    pub max: f64,
}

impl ByteMapping {
    pub fn of(grid: &Grid) -> Self {
        let (min, max) = grid.min_max();
        Self { min, max }
    }

    pub fn spanning(grids: &[Grid]) -> Self {
        grids.iter().map(Self::of).fold(
            Self {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |a, b| Self {
                min: a.min.min(b.min),
                max: a.max.max(b.max),
            },
        )
    }

    pub fn to_byte(&self, v: f64) -> u8 {
        let span = self.max - self.min;
        if span <= 0.0 {
            return 0;
        }
        (255.0 * (v - self.min) / span).round().clamp(0.0, 255.0) as u8
    }
}

pub fn to_gray_image(grid: &Grid, mapping: ByteMapping) -> GrayImage {
    let n = grid.side() as u32;
    GrayImage::from_fn(n, n, |x, y| Luma([mapping.to_byte(grid[(y as usize, x as usize)])]))
}

/// Lays grids out left to right with a one-pixel gap, each with its own
/// mapping.
pub fn panels_image(panels: &[(&Grid, ByteMapping)]) -> GrayImage {
    let height = panels.iter().map(|(g, _)| g.side()).max().unwrap_or(0) as u32;
    let width = panels.iter().map(|(g, _)| g.side() as u32 + 1).sum::<u32>().saturating_sub(1);
    let mut img = GrayImage::from_pixel(width, height, Luma([0]));
    let mut x0 = 0u32;
    for (g, m) in panels {
        let n = g.side() as u32;
        for y in 0..n {
            for x in 0..n {
                img.put_pixel(x0 + x, y, Luma([m.to_byte(g[(y as usize, x as usize)])]));
            }
        }
        x0 += n + 1;
    }
    img
}

pub fn save_png(path: &Path, img: &GrayImage) -> Result<()> {
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Decode {
            path: path.into(),
            message: e.to_string(),
        })?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Min-max scaled PNG of a single grid; returns the mapping used.
pub fn write_png(path: &Path, grid: &Grid) -> Result<ByteMapping> {
    let mapping = ByteMapping::of(grid);
    save_png(path, &to_gray_image(grid, mapping))?;
    Ok(mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn raw_header_layout() {
        let g = Grid::from_vec(2, vec![1.0, -2.0, 0.5, 0.0]).unwrap();
        let bytes = encode_raw(std::slice::from_ref(&g)).unwrap();
        assert_eq!(&bytes[..4], b"CLD1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 8 + 16);
        assert_eq!(&bytes[8..12], &1.0f32.to_le_bytes());
    }

    #[test]
    fn raw_rejects_truncation() {
        let g = Grid::zeros(3);
        let mut bytes = encode_raw(&[g.clone(), g]).unwrap();
        bytes.pop();
        match decode_raw(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 8 + 36),
            other => panic!("{other:?}"),
        }
        assert!(decode_raw(b"XXXX\x01\0\0\0\0\0\0\0").is_err());
    }

    proptest! {
        #[test]
        fn raw_roundtrip_is_lossless_for_f32(values in proptest::collection::vec(-1e6f32..1e6, 16 * 3)) {
            let grids: Vec<Grid> = values
                .chunks(16)
                .map(|c| Grid::from_vec(4, c.iter().map(|&v| v as f64).collect()).unwrap())
                .collect();
            let back = decode_raw(&encode_raw(&grids).unwrap()).unwrap();
            prop_assert_eq!(back, grids);
        }
    }

    #[test]
    fn byte_mapping_endpoints() {
        let m = ByteMapping { min: -1.0, max: 1.0 };
        assert_eq!(m.to_byte(-1.0), 0);
        assert_eq!(m.to_byte(1.0), 255);
        assert_eq!(m.to_byte(5.0), 255);
        assert_eq!(ByteMapping { min: 2.0, max: 2.0 }.to_byte(2.0), 0);
    }
}
