use serde::{Deserialize, Serialize};

use super::PixelMask;
use crate::error::{Error, Result};

/// Closed polygon in continuous image coordinates; the last vertex connects
/// back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolygonOutline {
    pub vertices: Vec<[f64; 2]>,
}

impl PolygonOutline {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let poly = Self { vertices };
        poly.validate()?;
        Ok(poly)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::TooFewVertices(self.vertices.len()));
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polygon vertex".into()));
        }
        Ok(())
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Even-odd fill sampled at pixel centres `(x + 0.5, y + 0.5)`.
///
/// An edge counts for a scanline when exactly one endpoint lies strictly
/// above it (half-open in y), and a crossing counts for a centre when it lies
/// strictly to the right of it.
pub fn rasterize_polygon(poly: &PolygonOutline, width: usize, height: usize) -> Result<PixelMask> {
    poly.validate()?;
    let mut mask = PixelMask::empty(width, height)?;
    let mut crossings = Vec::new();
    for y in 0..height {
        let cy = y as f64 + 0.5;
        crossings.clear();
        for ([x0, y0], [x1, y1]) in poly.edges() {
            if (y0 > cy) != (y1 > cy) {
                crossings.push(x0 + (cy - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(f64::total_cmp);
        let mut right = 0;
        for x in 0..width {
            let cx = x as f64 + 0.5;
            while right < crossings.len() && crossings[right] <= cx {
                right += 1;
            }
            if (crossings.len() - right) % 2 == 1 {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Classic crossing-number test, evaluated one point at a time.
    fn point_in_polygon(vertices: &[[f64; 2]], px: f64, py: f64) -> bool {
        let mut inside = false;
        let mut j = vertices.len() - 1;
        for i in 0..vertices.len() {
            let [xi, yi] = vertices[i];
            let [xj, yj] = vertices[j];
            if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn oracle(vertices: &[[f64; 2]], w: usize, h: usize) -> PixelMask {
        PixelMask::from_fn(w, h, |x, y| point_in_polygon(vertices, x as f64 + 0.5, y as f64 + 0.5)).unwrap()
    }

    #[test]
    fn rectangle_covers_four_centres() {
        let poly = PolygonOutline::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]).unwrap();
        let m = rasterize_polygon(&poly, 4, 4).unwrap();
        let fg: Vec<_> = m.foreground().collect();
        assert_eq!(fg, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn sliver_triangle_is_empty() {
        let poly = PolygonOutline::new(vec![[0.0, 0.0], [0.4, 0.0], [0.0, 0.4]]).unwrap();
        assert!(rasterize_polygon(&poly, 4, 4).unwrap().is_empty());
    }

    #[test]
    fn too_few_vertices() {
        let poly = PolygonOutline { vertices: vec![[0.0, 0.0], [1.0, 1.0]] };
        assert!(matches!(rasterize_polygon(&poly, 4, 4), Err(Error::TooFewVertices(2))));
    }

    #[test]
    fn star_matches_point_oracle() {
        let (cx, cy) = (16.0, 16.0);
        let star: Vec<[f64; 2]> = (0..10)
            .map(|k| {
                let r = if k % 2 == 0 { 14.0 } else { 5.5 };
                let a = std::f64::consts::PI * k as f64 / 5.0 - std::f64::consts::FRAC_PI_2;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        let poly = PolygonOutline::new(star.clone()).unwrap();
        let m = rasterize_polygon(&poly, 32, 32).unwrap();
        assert_eq!(m, oracle(&star, 32, 32));
        assert!(m.count() > 100);

        // self-intersecting pentagram: even-odd leaves the core empty
        let pentagram: Vec<[f64; 2]> = (0..5)
            .map(|k| {
                let a = 4.0 * std::f64::consts::PI * k as f64 / 5.0 - std::f64::consts::FRAC_PI_2;
                [cx + 14.0 * a.cos(), cy + 14.0 * a.sin()]
            })
            .collect();
        let m = rasterize_polygon(&PolygonOutline::new(pentagram.clone()).unwrap(), 32, 32).unwrap();
        assert_eq!(m, oracle(&pentagram, 32, 32));
        assert!(!m.get(16, 16));
    }

    #[test]
    fn random_convex_polygons_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(3..9);
            let (cx, cy, r) = (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), rng.random_range(0.5..12.0));
            let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let verts: Vec<[f64; 2]> = angles.iter().map(|a| [cx + r * a.cos(), cy + r * a.sin()]).collect();
            let m = rasterize_polygon(&PolygonOutline::new(verts.clone()).unwrap(), 20, 20).unwrap();
            assert_eq!(m, oracle(&verts, 20, 20));
        }
        // integer-aligned vertices exercise the half-open tie rules
        for _ in 0..300 {
            let verts: Vec<[f64; 2]> = (0..rng.random_range(3..7))
                .map(|_| [rng.random_range(0..12) as f64 * 0.5, rng.random_range(0..12) as f64 * 0.5])
                .collect();
            let m = rasterize_polygon(&PolygonOutline::new(verts.clone()).unwrap(), 6, 6).unwrap();
            assert_eq!(m, oracle(&verts, 6, 6));
        }
    }
}
