//! Binary foreground masks and the geometric primitives built on them.
//!
//! Masks are stored row-major with `true` marking foreground. Everything in
//! this module is a pure function over immutable inputs.

mod components;
mod pnm;
mod raster;
mod rle;

pub use components::{connected_components, Components};
pub use pnm::{format_pbm, parse_pbm, read_gray, read_pbm, write_pbm, GrayGrid};
pub use raster::{rasterize_polygon, PolygonOutline};
pub use rle::{decode_rle, encode_rle, RunLengthMask};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for PixelMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "PixelMask {}x{}", self.width, self.height)?;
        for row in self.bits.chunks(self.width) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl PixelMask {
    /// All-background mask.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    /// Builds a mask from 0/1 values in row-major order.
    pub fn from_bits(width: usize, height: usize, bits: &[u8]) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::BitCountMismatch {
                expected: width * height,
                actual: bits.len(),
            });
        }
        let bits = bits
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_bools(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::BitCountMismatch {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Mask whose foreground is every pixel for which `f(x, y)` holds.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b as u8).collect()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub(crate) fn ensure_same_dims(&self, other: &PixelMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

/// Inclusive pixel-coordinate box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: i64,
    pub y_min: i64,
    pub x_max: i64,
    pub y_max: i64,
}

impl BoundingBox {
    pub fn new(x_min: i64, y_min: i64, x_max: i64, y_max: i64) -> Result<Self> {
        if x_min > x_max || y_min > y_max {
            return Err(Error::InvalidBox(format!(
                "{x_min},{y_min},{x_max},{y_max}"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn area(&self) -> i64 {
        (self.x_max - self.x_min + 1) * (self.y_max - self.y_min + 1)
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min) + 1;
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min) + 1;
        if w <= 0 || h <= 0 {
            0
        } else {
            w * h
        }
    }

    /// Intersection-over-union of the pixel sets covered by two boxes.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }
}

/// |a ∩ b| / |a ∪ b|, with two empty masks counting as identical.
pub fn iou(a: &PixelMask, b: &PixelMask) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.bits.iter().zip(&b.bits) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Tightest box around the foreground.
pub fn bounding_box(mask: &PixelMask) -> Result<BoundingBox> {
    let mut it = mask.foreground();
    let (x0, y0) = it.next().ok_or(Error::EmptyMask)?;
    let (mut x_min, mut x_max, mut y_max) = (x0, x0, y0);
    for (x, y) in it {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_max = y;
    }
    Ok(BoundingBox {
        x_min: x_min as i64,
        y_min: y0 as i64,
        x_max: x_max as i64,
        y_max: y_max as i64,
    })
}

/// Foreground pixels that have a background 4-neighbour or touch the image
/// border, in row-major order.
pub fn boundary_pixels(mask: &PixelMask) -> Vec<(usize, usize)> {
    let (w, h) = mask.dims();
    mask.foreground()
        .filter(|&(x, y)| {
            x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1)
        })
        .collect()
}

/// Per-pixel strict majority over the input masks; ties go to background.
pub fn majority_reference(masks: &[PixelMask]) -> Result<PixelMask> {
    let first = masks.first().ok_or(Error::EmptyInput)?;
    for m in &masks[1..] {
        first.ensure_same_dims(m)?;
    }
    let mut votes = vec![0usize; first.len()];
    for m in masks {
        for (v, &b) in votes.iter_mut().zip(&m.bits) {
            *v += b as usize;
        }
    }
    let n = masks.len();
    Ok(PixelMask {
        width: first.width,
        height: first.height,
        bits: votes.into_iter().map(|v| 2 * v > n).collect(),
    })
}
