use crate::distance::distance_to;
use crate::error::{Error, Result};
use crate::mask::{boundary_pixels, PixelMask};

/// Symmetric mean Chamfer distance between the boundaries of two masks, in
/// pixels.
pub fn chamfer_distance(a: &PixelMask, b: &PixelMask) -> Result<f64> {
    a.ensure_same_dims(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    let edge_a = boundary_mask(a);
    let edge_b = boundary_mask(b);
    let a_to_b = mean_distance(&edge_a, &edge_b);
    let b_to_a = mean_distance(&edge_b, &edge_a);
    Ok(0.5 * (a_to_b + b_to_a))
}

fn boundary_mask(mask: &PixelMask) -> PixelMask {
    let mut out = PixelMask::empty(mask.width(), mask.height()).expect("valid dims");
    for (x, y) in boundary_pixels(mask) {
        out.set(x, y, true);
    }
    out
}

/// Mean over set pixels of `from` of the distance to the nearest set pixel
/// of `to`. Both are non-empty.
fn mean_distance(from: &PixelMask, to: &PixelMask) -> f64 {
    let dist = distance_to(to).expect("non-empty boundary");
    let w = from.width();
    let (sum, n) = from
        .foreground()
        .fold((0.0, 0usize), |(s, n), (x, y)| (s + dist[y * w + x], n + 1));
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let m = PixelMask::from_fn(8, 8, |x, y| (2..6).contains(&x) && y > 3).unwrap();
        assert_eq!(chamfer_distance(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn singletons() {
        let a = PixelMask::from_fn(5, 1, |x, _| x == 0).unwrap();
        let b = PixelMask::from_fn(5, 1, |x, _| x == 3).unwrap();
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn shifted_block_matches_pairwise() {
        let a = PixelMask::from_fn(6, 6, |x, y| (1..3).contains(&x) && (1..3).contains(&y)).unwrap();
        let b = PixelMask::from_fn(6, 6, |x, y| (2..4).contains(&x) && (1..3).contains(&y)).unwrap();
        // every pixel of a 2x2 block is a boundary pixel; the overlapping
        // column is at distance 0, the other at distance 1 on both sides
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn empty_rejected() {
        let a = PixelMask::from_fn(3, 3, |_, _| true).unwrap();
        let e = PixelMask::empty(3, 3).unwrap();
        assert!(matches!(chamfer_distance(&a, &e), Err(Error::EmptyMask)));
        assert!(matches!(chamfer_distance(&e, &a), Err(Error::EmptyMask)));
    }
}
