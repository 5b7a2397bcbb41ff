//! Tab-separated score, detection, subitizing and label files.
//!
//! ```text
//! scores:      image_id<TAB>score
//! detections:  image_id<TAB>x_min,y_min,x_max,y_max<TAB>confidence
//! subitizing:  image_id<TAB>p0,p1,p2,p3,p4plus
//! labels:      image_id<TAB>unambiguous|ambiguous
//! ```
//!
//! Blank lines are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{Ambiguity, DetectionWindow, SubitizingDistribution};
use crate::error::{Error, Result};
use crate::mask::BoundingBox;

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
}

fn expect_fields<'a>(lineno: usize, fields: &[&'a str], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(Error::parse(format!(
            "line {lineno}: expected {n} tab-separated fields, got {}",
            fields.len()
        )));
    }
    if fields[0].is_empty() {
        return Err(Error::parse(format!("line {lineno}: empty image id")));
    }
    Ok(())
}

fn check_known(known: Option<&BTreeSet<String>>, id: &str) -> Result<()> {
    match known {
        Some(k) if !k.contains(id) => Err(Error::UnknownImage(id.to_string())),
        _ => Ok(()),
    }
}

fn parse_f64(lineno: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("line {lineno}: bad number {s:?}")))
}

/// Parses a score file. When `known` is given, ids outside it are rejected.
pub fn parse_scores(text: &str, known: Option<&BTreeSet<String>>) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (lineno, fields) in lines(text) {
        expect_fields(lineno, &fields, 2)?;
        let id = fields[0];
        check_known(known, id)?;
        let score = parse_f64(lineno, fields[1])?;
        if !score.is_finite() {
            return Err(Error::NonFiniteScore(id.to_string()));
        }
        if out.insert(id.to_string(), score).is_some() {
            return Err(Error::parse(format!("line {lineno}: duplicate image id {id}")));
        }
    }
    Ok(out)
}

pub fn read_scores(path: &Path, known: Option<&BTreeSet<String>>) -> Result<BTreeMap<String, f64>> {
    parse_scores(&std::fs::read_to_string(path)?, known)
}

pub fn write_scores(scores: &BTreeMap<String, f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (id, s) in scores {
        writeln!(out, "{id}\t{s}").expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn parse_detections(
    text: &str,
    known: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, Vec<DetectionWindow>>> {
    let mut out: BTreeMap<String, Vec<DetectionWindow>> = BTreeMap::new();
    for (lineno, fields) in lines(text) {
        expect_fields(lineno, &fields, 3)?;
        let id = fields[0];
        check_known(known, id)?;
        let coords = fields[1]
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::parse(format!("line {lineno}: bad box coordinate {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let [x0, y0, x1, y1] = coords[..] else {
            return Err(Error::parse(format!("line {lineno}: box needs 4 coordinates")));
        };
        let confidence = parse_f64(lineno, fields[2])?;
        if !confidence.is_finite() {
            return Err(Error::NonFiniteScore(id.to_string()));
        }
        out.entry(id.to_string()).or_default().push(DetectionWindow {
            bbox: BoundingBox::new(x0, y0, x1, y1)?,
            confidence,
        });
    }
    Ok(out)
}

pub fn read_detections(
    path: &Path,
    known: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, Vec<DetectionWindow>>> {
    parse_detections(&std::fs::read_to_string(path)?, known)
}

pub fn parse_subitizing(
    text: &str,
    known: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, SubitizingDistribution>> {
    let mut out = BTreeMap::new();
    for (lineno, fields) in lines(text) {
        expect_fields(lineno, &fields, 2)?;
        let id = fields[0];
        check_known(known, id)?;
        let probs = fields[1]
            .split(',')
            .map(|p| parse_f64(lineno, p))
            .collect::<Result<Vec<_>>>()?;
        let probs: [f64; 5] = probs
            .try_into()
            .map_err(|_| Error::parse(format!("line {lineno}: expected 5 probabilities")))?;
        let dist = SubitizingDistribution(probs);
        dist.validate(id)?;
        if out.insert(id.to_string(), dist).is_some() {
            return Err(Error::parse(format!("line {lineno}: duplicate image id {id}")));
        }
    }
    Ok(out)
}

pub fn read_subitizing(
    path: &Path,
    known: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, SubitizingDistribution>> {
    parse_subitizing(&std::fs::read_to_string(path)?, known)
}

pub fn parse_label_file(text: &str) -> Result<BTreeMap<String, Ambiguity>> {
    let mut out = BTreeMap::new();
    for (lineno, fields) in lines(text) {
        expect_fields(lineno, &fields, 2)?;
        let label: Ambiguity = fields[1].trim().parse()?;
        if out.insert(fields[0].to_string(), label).is_some() {
            return Err(Error::parse(format!("line {lineno}: duplicate image id {}", fields[0])));
        }
    }
    Ok(out)
}

pub fn read_label_file(path: &Path) -> Result<BTreeMap<String, Ambiguity>> {
    parse_label_file(&std::fs::read_to_string(path)?)
}
