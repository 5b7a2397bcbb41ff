//! Netpbm I/O: plain bitmaps (`P1`) for masks, graymaps for images.

use std::io::Write;
use std::path::Path;

use super::PixelMask;
use crate::error::{Error, Result};

/// Luminance image with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GrayGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image".into()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Quantizes to 8 bits and writes a binary graymap (`P5`).
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let mut out = Vec::with_capacity(bytes.len() + 20);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend_from_slice(&bytes);
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Reads any 8-bit image the `image` crate understands (P2/P5 graymaps, PNG)
/// and converts it to luminance in `[0, 1]`.
pub fn read_gray(path: &Path) -> Result<GrayGrid> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    GrayGrid::new(
        w as usize,
        h as usize,
        img.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
    )
}

/// Parses a plain (`P1`) bitmap; `1` is foreground.
pub fn parse_pbm(text: &str) -> Result<PixelMask> {
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        body.push_str(line);
        body.push('\n');
    }
    let mut tokens = body.split_whitespace();
    if tokens.next() != Some("P1") {
        return Err(Error::parse("bitmap must start with magic P1"));
    }
    let mut dim = |name: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::parse(format!("missing {name}")))?
            .parse()
            .map_err(|_| Error::parse(format!("bad {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let mut bits = Vec::with_capacity(width * height);
    for tok in tokens {
        for c in tok.chars() {
            match c {
                '0' => bits.push(0u8),
                '1' => bits.push(1u8),
                other => return Err(Error::parse(format!("unexpected bitmap character {other:?}"))),
            }
        }
    }
    PixelMask::from_bits(width, height, &bits)
}

pub fn read_pbm(path: &Path) -> Result<PixelMask> {
    parse_pbm(&std::fs::read_to_string(path)?)
}

pub fn format_pbm(mask: &PixelMask) -> String {
    let mut out = format!("P1\n{} {}\n", mask.width(), mask.height());
    for row in mask.bits().chunks(mask.width()) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_pbm(mask: &PixelMask, path: &Path) -> Result<()> {
    std::fs::write(path, format_pbm(mask))?;
    Ok(())
}
