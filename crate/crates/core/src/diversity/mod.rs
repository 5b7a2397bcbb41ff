//! Per-annotation and batch-level segmentation diversity.
//!
//! Each annotation is compared with the image's reference mask (the strict
//! pixel majority over every collected mask). Two measures are kept apart
//! throughout: a region measure, `1 - weighted F`, and a boundary measure,
//! the Chamfer distance in pixels.
//!
//! Batch totals follow
//! `D(I) = sum_k d_k0 + sum_{j in selected} sum_{a=1..extra} d_ja`,
//! where index 0 is the first collected annotation and indices `1..=extra`
//! are the redundant ones in collection order.

mod chamfer;
mod fmeasure;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chamfer::chamfer_distance;
pub use fmeasure::weighted_fmeasure;

use crate::allocation::AllocationPlan;
use crate::error::{Error, Result};
use crate::mask::{majority_reference, PixelMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Region,
    Boundary,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::Region, Measure::Boundary];

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Region => "region",
            Measure::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "region" => Ok(Measure::Region),
            "boundary" => Ok(Measure::Boundary),
            other => Err(Error::parse(format!("unknown measure {other:?}"))),
        }
    }
}

/// Diversity of one annotation. `boundary` is `None` when the Chamfer
/// distance is undefined (empty reference or empty annotation); such entries
/// are left out of boundary totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityScore {
    pub region: f64,
    pub boundary: Option<f64>,
}

impl DiversityScore {
    pub fn get(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Region => self.region,
            Measure::Boundary => self.boundary.unwrap_or(0.0),
        }
    }
}

/// Masks collected for one image, in collection order, together with their
/// majority reference.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    image_id: String,
    masks: Vec<PixelMask>,
    reference: PixelMask,
}

impl AnnotationSet {
    pub fn new(image_id: impl Into<String>, masks: Vec<PixelMask>) -> Result<Self> {
        let reference = majority_reference(&masks)?;
        Ok(Self {
            image_id: image_id.into(),
            masks,
            reference,
        })
    }

    pub fn push(&mut self, mask: PixelMask) -> Result<()> {
        self.reference.ensure_same_dims(&mask)?;
        self.masks.push(mask);
        self.reference = majority_reference(&self.masks)?;
        Ok(())
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn masks(&self) -> &[PixelMask] {
        &self.masks
    }

    pub fn reference(&self) -> &PixelMask {
        &self.reference
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Scores of every annotation in collection order.
    pub fn scores(&self) -> Result<Vec<DiversityScore>> {
        (0..self.masks.len())
            .map(|i| annotation_diversity(self, i))
            .collect()
    }
}

/// `1 - weighted_fmeasure`. With an empty reference there is no majority
/// object: any non-empty annotation is fully diverse, an empty one is not.
pub fn region_diversity(annotation: &PixelMask, reference: &PixelMask) -> Result<f64> {
    match weighted_fmeasure(annotation, reference) {
        Ok(f) => Ok(1.0 - f),
        Err(Error::EmptyReference) => Ok(if annotation.is_empty() { 0.0 } else { 1.0 }),
        Err(e) => Err(e),
    }
}

pub fn annotation_diversity(set: &AnnotationSet, index: usize) -> Result<DiversityScore> {
    let mask = set.masks.get(index).ok_or(Error::IndexOutOfRange {
        index,
        len: set.masks.len(),
    })?;
    let region = region_diversity(mask, &set.reference)?;
    let boundary = match chamfer_distance(mask, &set.reference) {
        Ok(d) => Some(d),
        Err(Error::EmptyMask) => None,
        Err(e) => return Err(e),
    };
    Ok(DiversityScore { region, boundary })
}

/// Diversity totals for one allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDiversity {
    /// Scores of the annotations counted for each image (index 0 first).
    pub per_image: BTreeMap<String, Vec<DiversityScore>>,
    pub total_region: f64,
    pub total_boundary: f64,
}

impl BatchDiversity {
    pub fn total(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Region => self.total_region,
            Measure::Boundary => self.total_boundary,
        }
    }
}

/// Precomputed per-annotation scores for a batch, keyed by image id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiversityTable {
    scores: BTreeMap<String, Vec<DiversityScore>>,
}

impl DiversityTable {
    /// Scores every annotation of every set; images are processed in
    /// parallel.
    pub fn from_sets(sets: &BTreeMap<String, AnnotationSet>) -> Result<Self> {
        let scored: Vec<(String, Vec<DiversityScore>)> = sets
            .par_iter()
            .map(|(id, set)| set.scores().map(|s| (id.clone(), s)))
            .collect::<Result<_>>()?;
        Ok(Self {
            scores: scored.into_iter().collect(),
        })
    }

    pub fn from_scores(scores: BTreeMap<String, Vec<DiversityScore>>) -> Result<Self> {
        if let Some((id, _)) = scores.iter().find(|(_, s)| s.is_empty()) {
            return Err(Error::InsufficientAnnotations {
                image_id: id.clone(),
                available: 0,
                required: 1,
            });
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &BTreeMap<String, Vec<DiversityScore>> {
        &self.scores
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &String> {
        self.scores.keys()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `sum_k d_k0`.
    pub fn first_term(&self, measure: Measure) -> f64 {
        self.scores.values().map(|s| s[0].get(measure)).sum()
    }

    /// `sum_{a=1..extra} d_ja` for one image.
    pub fn redundant(&self, image_id: &str, extra: usize, measure: Measure) -> Result<f64> {
        let s = self
            .scores
            .get(image_id)
            .ok_or_else(|| Error::UnknownImage(image_id.to_string()))?;
        if s.len() < 1 + extra {
            return Err(Error::InsufficientAnnotations {
                image_id: image_id.to_string(),
                available: s.len(),
                required: 1 + extra,
            });
        }
        Ok(s[1..=extra].iter().map(|d| d.get(measure)).sum())
    }

    /// Sum over the first `count` annotations of one image.
    pub fn prefix(&self, image_id: &str, count: usize, measure: Measure) -> Result<f64> {
        let s = self
            .scores
            .get(image_id)
            .ok_or_else(|| Error::UnknownImage(image_id.to_string()))?;
        if s.len() < count {
            return Err(Error::InsufficientAnnotations {
                image_id: image_id.to_string(),
                available: s.len(),
                required: count,
            });
        }
        Ok(s[..count].iter().map(|d| d.get(measure)).sum())
    }

    /// Total with every image receiving `extra` redundant annotations.
    pub fn full_total(&self, extra: usize, measure: Measure) -> Result<f64> {
        let mut total = self.first_term(measure);
        for id in self.scores.keys() {
            total += self.redundant(id, extra, measure)?;
        }
        Ok(total)
    }

    /// Totals for `plan`. Sums run in image-id order, so the result does not
    /// depend on the order in which the plan lists its images.
    pub fn total(&self, plan: &AllocationPlan) -> Result<BatchDiversity> {
        let mut per_image: BTreeMap<String, Vec<DiversityScore>> =
            self.scores.iter().map(|(id, s)| (id.clone(), vec![s[0]])).collect();
        for id in &plan.selected {
            let s = self
                .scores
                .get(id)
                .ok_or_else(|| Error::UnknownImage(id.clone()))?;
            if s.len() < 1 + plan.extra {
                return Err(Error::InsufficientAnnotations {
                    image_id: id.clone(),
                    available: s.len(),
                    required: 1 + plan.extra,
                });
            }
            let counted = per_image.get_mut(id).expect("present");
            if counted.len() > 1 {
                return Err(Error::parse(format!("plan selects {id} twice")));
            }
            counted.extend_from_slice(&s[1..=plan.extra]);
        }
        let (mut total_region, mut total_boundary) = (0.0, 0.0);
        for d in per_image.values().flatten() {
            total_region += d.get(Measure::Region);
            total_boundary += d.get(Measure::Boundary);
        }
        Ok(BatchDiversity {
            per_image,
            total_region,
            total_boundary,
        })
    }
}

pub fn batch_total_diversity(
    sets: &BTreeMap<String, AnnotationSet>,
    plan: &AllocationPlan,
) -> Result<BatchDiversity> {
    DiversityTable::from_sets(sets)?.total(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region_only(values: &[f64]) -> Vec<DiversityScore> {
        values
            .iter()
            .map(|&r| DiversityScore { region: r, boundary: Some(r * 10.0) })
            .collect()
    }

    fn plan(selected: &[&str], extra: usize) -> AllocationPlan {
        AllocationPlan {
            budget: selected.len(),
            extra,
            selected: selected.iter().map(|s| s.to_string()).collect(),
            strategy: "test".into(),
        }
    }

    fn table() -> DiversityTable {
        let mut m = BTreeMap::new();
        m.insert("img1".to_string(), region_only(&[0.1, 0.2, 0.3]));
        m.insert("img2".to_string(), region_only(&[0.0, 0.4]));
        m.insert("img3".to_string(), region_only(&[0.2]));
        DiversityTable::from_scores(m).unwrap()
    }

    #[test]
    fn objective_arithmetic() {
        let t = table();
        let b = t.total(&plan(&["img1"], 2)).unwrap();
        assert!((b.total_region - 0.8).abs() < 1e-12);
        assert!((b.total_boundary - 8.0).abs() < 1e-12);
        assert_eq!(b.per_image["img1"].len(), 3);
        assert_eq!(b.per_image["img3"].len(), 1);

        let none = t.total(&plan(&[], 2)).unwrap();
        assert!((none.total_region - 0.3).abs() < 1e-12);
        assert!((none.total_region - t.first_term(Measure::Region)).abs() < 1e-15);
    }

    #[test]
    fn insufficient_annotations() {
        let t = table();
        assert!(matches!(
            t.total(&plan(&["img2"], 2)),
            Err(Error::InsufficientAnnotations { available: 2, required: 3, .. })
        ));
    }

    #[test]
    fn identical_masks_score_zero() {
        let m = PixelMask::from_fn(10, 10, |x, y| (3..7).contains(&x) && (2..8).contains(&y)).unwrap();
        let set = AnnotationSet::new("a", vec![m.clone(); 4]).unwrap();
        for s in set.scores().unwrap() {
            assert_eq!(s, DiversityScore { region: 0.0, boundary: Some(0.0) });
        }
        let single = AnnotationSet::new("b", vec![m]).unwrap();
        assert_eq!(
            annotation_diversity(&single, 0).unwrap(),
            DiversityScore { region: 0.0, boundary: Some(0.0) }
        );
        assert!(matches!(
            annotation_diversity(&single, 1),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn empty_reference_rule() {
        let a = PixelMask::from_fn(6, 6, |x, _| x < 2).unwrap();
        let b = PixelMask::from_fn(6, 6, |x, _| x > 3).unwrap();
        let set = AnnotationSet::new("split", vec![a, b]).unwrap();
        assert!(set.reference().is_empty());
        for s in set.scores().unwrap() {
            assert_eq!(s.region, 1.0);
            assert_eq!(s.boundary, None);
        }
        let e = PixelMask::empty(6, 6).unwrap();
        assert_eq!(region_diversity(&e, &e).unwrap(), 0.0);
    }

    #[test]
    fn reference_tracks_pushes() {
        let a = PixelMask::from_fn(4, 4, |x, _| x < 2).unwrap();
        let b = PixelMask::from_fn(4, 4, |x, _| x >= 2).unwrap();
        let mut set = AnnotationSet::new("x", vec![a.clone()]).unwrap();
        assert_eq!(set.reference(), &a);
        set.push(b.clone()).unwrap();
        assert!(set.reference().is_empty());
        set.push(b.clone()).unwrap();
        assert_eq!(set.reference(), &b);
        assert!(set.push(PixelMask::empty(3, 3).unwrap()).is_err());
    }

    #[test]
    fn measure_parsing() {
        assert_eq!("region".parse::<Measure>().unwrap(), Measure::Region);
        assert_eq!("boundary".parse::<Measure>().unwrap(), Measure::Boundary);
        assert!("both".parse::<Measure>().is_err());
    }
}
