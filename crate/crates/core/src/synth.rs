//! Synthetic corpora for demos, tests and benchmarks.
//!
//! Two generators:
//!
//! * [`annotation_corpus`]: images with pools of collected masks. An
//!   ambiguous image contains two objects; three workers outline one and two
//!   outline the other. An unambiguous image contains one object that every
//!   worker outlines, up to a single boundary pixel.
//! * [`blob_corpus`]: grayscale images for the classifier; one bright blob
//!   (unambiguous) or two to four scattered blobs (ambiguous) on a flat
//!   background.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mask::{boundary_pixels, encode_rle, GrayGrid, PixelMask};
use crate::scoring::Ambiguity;
use crate::service::{write_manifest, AnnotationEntry, ImageRecord};

/// Score method name under which generated corpora store their labels as
/// scores (1 = unambiguous, 0 = ambiguous).
pub const ORACLE_METHOD: &str = "oracle";

#[derive(Debug, Clone)]
pub struct SynthImage {
    pub image_id: String,
    pub label: Ambiguity,
    pub image: GrayGrid,
    /// Collected masks in arrival order; empty for classifier images.
    pub masks: Vec<PixelMask>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotationCorpusConfig {
    pub images: usize,
    pub ambiguous_fraction: f64,
    pub pool_size: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for AnnotationCorpusConfig {
    fn default() -> Self {
        Self {
            images: 100,
            ambiguous_fraction: 0.3,
            pool_size: 5,
            size: 32,
            seed: 7,
        }
    }
}

fn ellipse(size: usize, cx: f64, cy: f64, rx: f64, ry: f64) -> Result<PixelMask> {
    PixelMask::from_fn(size, size, |x, y| {
        let dx = (x as f64 + 0.5 - cx) / rx;
        let dy = (y as f64 + 0.5 - cy) / ry;
        dx * dx + dy * dy <= 1.0
    })
}

/// Flips one boundary pixel off, or one outside neighbour on.
fn jitter(mask: &PixelMask, rng: &mut ChaCha8Rng) -> PixelMask {
    let mut m = mask.clone();
    let border = boundary_pixels(mask);
    if border.len() < 2 {
        return m;
    }
    let (x, y) = border[rng.random_range(0..border.len())];
    if rng.random_bool(0.5) {
        m.set(x, y, false);
    } else {
        let (w, h) = mask.dims();
        let candidates = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        if let Some(&(nx, ny)) = candidates.iter().find(|&&(nx, ny)| nx < w && ny < h && !mask.get(nx, ny)) {
            m.set(nx, ny, true);
        }
    }
    m
}

fn render(size: usize, objects: &[&PixelMask], rng: &mut ChaCha8Rng) -> Result<GrayGrid> {
    let bg = rng.random_range(0.1..0.3);
    let levels: Vec<f64> = objects.iter().map(|_| rng.random_range(0.7..0.95)).collect();
    GrayGrid::from_fn(size, size, |x, y| {
        objects
            .iter()
            .zip(&levels)
            .find(|(m, _)| m.get(x, y))
            .map_or(bg, |(_, &l)| l)
    })
}

/// Images with annotation pools; the first `round(images * fraction)` ids in
/// a seeded shuffle are ambiguous.
pub fn annotation_corpus(cfg: &AnnotationCorpusConfig) -> Result<Vec<SynthImage>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_amb = (cfg.images as f64 * cfg.ambiguous_fraction).round() as usize;
    let mut kinds: Vec<bool> = (0..cfg.images).map(|i| i < n_amb).collect();
    kinds.shuffle(&mut rng);
    let s = cfg.size as f64;
    let majority = cfg.pool_size / 2 + 1;
    let mut out = Vec::with_capacity(cfg.images);
    for (i, ambiguous) in kinds.into_iter().enumerate() {
        let image_id = format!("img{i:04}");
        // object A on the left, object B on the right
        let a = ellipse(
            cfg.size,
            s * rng.random_range(0.22..0.3),
            s * rng.random_range(0.35..0.65),
            s * rng.random_range(0.12..0.18),
            s * rng.random_range(0.15..0.3),
        )?;
        if !ambiguous {
            let image = render(cfg.size, &[&a], &mut rng)?;
            let mut masks = vec![a.clone()];
            for _ in 1..cfg.pool_size {
                masks.push(if rng.random_bool(0.3) { jitter(&a, &mut rng) } else { a.clone() });
            }
            masks.shuffle(&mut rng);
            out.push(SynthImage {
                image_id,
                label: Ambiguity::Unambiguous,
                image,
                masks,
            });
            continue;
        }
        let b = ellipse(
            cfg.size,
            s * rng.random_range(0.7..0.78),
            s * rng.random_range(0.35..0.65),
            s * rng.random_range(0.12..0.18),
            s * rng.random_range(0.15..0.3),
        )?;
        let image = render(cfg.size, &[&a, &b], &mut rng)?;
        let (major, minor) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        let mut masks: Vec<PixelMask> = (0..cfg.pool_size)
            .map(|k| if k < majority { major.clone() } else { minor.clone() })
            .collect();
        masks.shuffle(&mut rng);
        out.push(SynthImage {
            image_id,
            label: Ambiguity::Ambiguous,
            image,
            masks,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobCorpusConfig {
    pub images: usize,
    pub ambiguous_fraction: f64,
    pub size: usize,
    pub seed: u64,
}

impl Default for BlobCorpusConfig {
    fn default() -> Self {
        Self {
            images: 400,
            ambiguous_fraction: 0.5,
            size: 64,
            seed: 11,
        }
    }
}

/// Classifier images; blobs are discs that do not overlap.
pub fn blob_corpus(cfg: &BlobCorpusConfig) -> Result<Vec<SynthImage>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_amb = (cfg.images as f64 * cfg.ambiguous_fraction).round() as usize;
    let mut kinds: Vec<bool> = (0..cfg.images).map(|i| i < n_amb).collect();
    kinds.shuffle(&mut rng);
    let s = cfg.size as f64;
    let mut out = Vec::with_capacity(cfg.images);
    for (i, ambiguous) in kinds.into_iter().enumerate() {
        let count = if ambiguous { rng.random_range(2..=4) } else { 1 };
        let mut discs: Vec<(f64, f64, f64)> = Vec::new();
        while discs.len() < count {
            let r = s * rng.random_range(0.08..0.14);
            let cx = rng.random_range(r + 1.0..s - r - 1.0);
            let cy = rng.random_range(r + 1.0..s - r - 1.0);
            let clear = discs
                .iter()
                .all(|&(x, y, q)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() > r + q + 2.0);
            if clear {
                discs.push((cx, cy, r));
            }
        }
        let bg = rng.random_range(0.1..0.3);
        let fg = rng.random_range(0.75..0.95);
        let image = GrayGrid::from_fn(cfg.size, cfg.size, |x, y| {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            if discs.iter().any(|&(cx, cy, r)| (px - cx).powi(2) + (py - cy).powi(2) <= r * r) {
                fg
            } else {
                bg
            }
        })?;
        out.push(SynthImage {
            image_id: format!("blob{i:04}"),
            label: if ambiguous { Ambiguity::Ambiguous } else { Ambiguity::Unambiguous },
            image,
            masks: Vec::new(),
        });
    }
    Ok(out)
}

pub fn oracle_scores(images: &[SynthImage]) -> BTreeMap<String, f64> {
    images
        .iter()
        .map(|i| (i.image_id.clone(), if i.label.is_positive() { 1.0 } else { 0.0 }))
        .collect()
}

pub fn labels(images: &[SynthImage]) -> BTreeMap<String, Ambiguity> {
    images.iter().map(|i| (i.image_id.clone(), i.label)).collect()
}

/// Manifest records with relative `images/<id>.pgm` paths, masks as
/// annotations (timestamps 1, 2, ...) and oracle scores.
pub fn manifest_records(images: &[SynthImage]) -> Vec<ImageRecord> {
    let scores = oracle_scores(images);
    images
        .iter()
        .map(|img| {
            let mut r = ImageRecord::new(
                img.image_id.clone(),
                img.image.width,
                img.image.height,
                PathBuf::from("images").join(format!("{}.pgm", img.image_id)),
            );
            r.source = "synthetic".into();
            r.annotations = img
                .masks
                .iter()
                .enumerate()
                .map(|(k, m)| AnnotationEntry {
                    worker_id: format!("synth{k}"),
                    timestamp: k as u64 + 1,
                    mask: encode_rle(m),
                })
                .collect();
            r.scores.insert(ORACLE_METHOD.into(), scores[&img.image_id]);
            r
        })
        .collect()
}

/// Writes `images/*.pgm`, `manifest.jsonl` and `labels.tsv` under `dir`
/// and returns the manifest path.
pub fn write_corpus(dir: &Path, images: &[SynthImage]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir.join("images"))?;
    for img in images {
        img.image.write_pgm(&dir.join("images").join(format!("{}.pgm", img.image_id)))?;
    }
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest_records(images), &manifest)?;
    let mut text = String::new();
    for img in images {
        text.push_str(&format!("{}\t{}\n", img.image_id, img.label));
    }
    std::fs::write(dir.join("labels.tsv"), text)?;
    Ok(manifest)
}
