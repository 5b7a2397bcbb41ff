//! Shared fixtures for the criterion benchmarks.

use std::collections::BTreeMap;

use redund_core::synth::{annotation_corpus, AnnotationCorpusConfig};
use redund_core::{AnnotationSet, PixelMask};

/// Two overlapping discs on a `size`-square grid.
pub fn disc_pair(size: usize) -> (PixelMask, PixelMask) {
    let r = size as f64 / 3.0;
    let c = size as f64 / 2.0;
    let disc = |cx: f64| {
        PixelMask::from_fn(size, size, move |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - c);
            dx * dx + dy * dy <= r * r
        })
        .unwrap()
    };
    (disc(c), disc(c + size as f64 / 8.0))
}

/// Annotation sets for a synthetic batch of `images` images.
pub fn annotation_sets(images: usize) -> BTreeMap<String, AnnotationSet> {
    let corpus = annotation_corpus(&AnnotationCorpusConfig { images, ..Default::default() }).unwrap();
    corpus
        .into_iter()
        .map(|s| {
            let set = AnnotationSet::new(s.image_id.clone(), s.masks).unwrap();
            (s.image_id, set)
        })
        .collect()
}
