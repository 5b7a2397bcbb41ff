use serde::{Deserialize, Serialize};

use super::PixelMask;
use crate::error::{Error, Result};

/// Row-major run lengths, alternating background/foreground and starting
/// with background. Serialized as `{"w":W,"h":H,"runs":[...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLengthMask {
    #[serde(rename = "w")]
    pub width: usize,
    #[serde(rename = "h")]
    pub height: usize,
    pub runs: Vec<usize>,
}

pub fn encode_rle(mask: &PixelMask) -> RunLengthMask {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &b in mask.bits() {
        if b != current {
            runs.push(len);
            current = b;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);
    RunLengthMask {
        width: mask.width(),
        height: mask.height(),
        runs,
    }
}

pub fn decode_rle(rle: &RunLengthMask) -> Result<PixelMask> {
    let expected = rle.width * rle.height;
    let actual: usize = rle.runs.iter().sum();
    if actual != expected {
        return Err(Error::RunSumMismatch { expected, actual });
    }
    if let Some(index) = rle.runs.iter().skip(1).position(|&r| r == 0) {
        return Err(Error::ZeroRun { index: index + 1 });
    }
    let mut bits = Vec::with_capacity(expected);
    for (i, &run) in rle.runs.iter().enumerate() {
        bits.extend(std::iter::repeat_n(i % 2 == 1, run));
    }
    PixelMask::from_bools(rle.width, rle.height, bits)
}
