//! Corpus manifest: one JSON [`ImageRecord`] per line.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diversity::AnnotationSet;
use crate::error::{Error, Result};
use crate::mask::{decode_rle, RunLengthMask};
use crate::scoring::VoteRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteEntry {
    pub worker_id: String,
    pub vote: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub worker_id: String,
    /// Milliseconds since the epoch; strictly increasing per image.
    pub timestamp: u64,
    pub mask: RunLengthMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub source: String,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub votes: Vec<VoteEntry>,
    #[serde(default)]
    pub annotations: Vec<AnnotationEntry>,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<String>, width: usize, height: usize, path: impl Into<PathBuf>) -> Self {
        Self {
            image_id: image_id.into(),
            width,
            height,
            source: String::new(),
            path: path.into(),
            votes: Vec::new(),
            annotations: Vec::new(),
            scores: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            });
        }
        let mut last = None;
        for a in &self.annotations {
            if (a.mask.width, a.mask.height) != (self.width, self.height) {
                return Err(Error::DimensionMismatch {
                    left: (self.width, self.height),
                    right: (a.mask.width, a.mask.height),
                });
            }
            if last.is_some_and(|t| a.timestamp <= t) {
                return Err(Error::parse(format!(
                    "image {}: annotation timestamps are not strictly increasing",
                    self.image_id
                )));
            }
            last = Some(a.timestamp);
        }
        if let Some((method, _)) = self.scores.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::NonFiniteScore(format!("{} ({method})", self.image_id)));
        }
        Ok(())
    }

    pub fn resolved_path(&self, manifest_dir: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            manifest_dir.join(&self.path)
        }
    }

    pub fn vote_records(&self) -> Vec<VoteRecord> {
        self.votes
            .iter()
            .map(|v| VoteRecord {
                image_id: self.image_id.clone(),
                worker_id: v.worker_id.clone(),
                vote: v.vote,
            })
            .collect()
    }

    /// Decoded masks in collection order.
    pub fn annotation_set(&self) -> Result<AnnotationSet> {
        let masks = self
            .annotations
            .iter()
            .map(|a| decode_rle(&a.mask))
            .collect::<Result<Vec<_>>>()?;
        if masks.is_empty() {
            return Err(Error::InsufficientAnnotations {
                image_id: self.image_id.clone(),
                available: 0,
                required: 1,
            });
        }
        AnnotationSet::new(self.image_id.clone(), masks)
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ImageRecord>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ImageRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(format!("manifest line {}: {e}", i + 1)))?;
        rec.validate()?;
        if !seen.insert(rec.image_id.clone()) {
            return Err(Error::DuplicateImage(rec.image_id));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ImageRecord>> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

pub fn format_manifest(records: &[ImageRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_manifest(records: &[ImageRecord], path: &Path) -> Result<()> {
    std::fs::write(path, format_manifest(records)?)?;
    Ok(())
}

/// Annotation sets keyed by image id. Every record must carry at least
/// `min_annotations` masks.
pub fn annotation_sets(records: &[ImageRecord], min_annotations: usize) -> Result<BTreeMap<String, AnnotationSet>> {
    let mut out = BTreeMap::new();
    for r in records {
        if r.annotations.len() < min_annotations.max(1) {
            return Err(Error::InsufficientAnnotations {
                image_id: r.image_id.clone(),
                available: r.annotations.len(),
                required: min_annotations.max(1),
            });
        }
        out.insert(r.image_id.clone(), r.annotation_set()?);
    }
    Ok(out)
}

/// Scores stored under `method` for every record.
pub fn method_scores(records: &[ImageRecord], method: &str) -> Result<BTreeMap<String, f64>> {
    records
        .iter()
        .map(|r| {
            r.scores
                .get(method)
                .map(|&s| (r.image_id.clone(), s))
                .ok_or_else(|| Error::MissingScore(r.image_id.clone()))
        })
        .collect()
}
