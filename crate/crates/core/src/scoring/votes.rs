use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Ambiguity, AmbiguityLabel, LabelSource};
use crate::error::{Error, Result};
use crate::mask::{connected_components, iou, PixelMask};

pub const VOTES_PER_IMAGE: usize = 5;
/// Pairs of drawings overlapping less than this are taken to show different
/// objects.
pub const DRAWER_IOU_THRESHOLD: f64 = 0.5;

/// One judger's answer to "would everyone pick the same object?".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoteRecord {
    pub image_id: String,
    pub worker_id: String,
    /// `true` = same object for everyone (unambiguous).
    pub vote: bool,
}

/// Majority of exactly five votes from distinct workers.
pub fn aggregate_votes(votes: &[VoteRecord]) -> Result<AmbiguityLabel> {
    if votes.len() != VOTES_PER_IMAGE {
        return Err(Error::WrongVoteCount(votes.len()));
    }
    let image_id = &votes[0].image_id;
    if votes.iter().any(|v| &v.image_id != image_id) {
        return Err(Error::MixedImages);
    }
    let mut seen = BTreeSet::new();
    for v in votes {
        if !seen.insert(v.worker_id.as_str()) {
            return Err(Error::DuplicateWorker(v.worker_id.clone()));
        }
    }
    let yes = votes.iter().filter(|v| v.vote).count();
    let label = if 2 * yes > VOTES_PER_IMAGE {
        Ambiguity::Unambiguous
    } else {
        Ambiguity::Ambiguous
    };
    Ok(AmbiguityLabel {
        image_id: image_id.clone(),
        label,
        source: LabelSource::Judgers,
    })
}

/// Ambiguous iff some drawing has more than one component or some pair of
/// drawings overlaps with IoU below 0.5.
pub fn label_from_drawings(image_id: &str, masks: &[PixelMask]) -> Result<AmbiguityLabel> {
    if masks.len() < 2 {
        return Err(Error::TooFewMasks {
            required: 2,
            actual: masks.len(),
        });
    }
    for m in masks {
        masks[0].ensure_same_dims(m)?;
        if m.is_empty() {
            return Err(Error::EmptyMask);
        }
    }
    let mut ambiguous = masks.iter().any(|m| connected_components(m).count > 1);
    'pairs: for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            if ambiguous {
                break 'pairs;
            }
            ambiguous = iou(&masks[i], &masks[j])? < DRAWER_IOU_THRESHOLD;
        }
    }
    Ok(AmbiguityLabel {
        image_id: image_id.to_string(),
        label: if ambiguous {
            Ambiguity::Ambiguous
        } else {
            Ambiguity::Unambiguous
        },
        source: LabelSource::Drawers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn votes(pattern: &[bool]) -> Vec<VoteRecord> {
        pattern
            .iter()
            .enumerate()
            .map(|(i, &v)| VoteRecord {
                image_id: "img".into(),
                worker_id: format!("w{i}"),
                vote: v,
            })
            .collect()
    }

    #[test]
    fn majority_of_five() {
        let l = aggregate_votes(&votes(&[true, true, true, false, false])).unwrap();
        assert_eq!(l.label, Ambiguity::Unambiguous);
        assert_eq!(l.source, LabelSource::Judgers);
        let l = aggregate_votes(&votes(&[false; 5])).unwrap();
        assert_eq!(l.label, Ambiguity::Ambiguous);
        assert!(matches!(
            aggregate_votes(&votes(&[true; 4])),
            Err(Error::WrongVoteCount(4))
        ));
        let mut dup = votes(&[true; 5]);
        dup[4].worker_id = "w0".into();
        assert!(matches!(aggregate_votes(&dup), Err(Error::DuplicateWorker(_))));
        let mut mixed = votes(&[true; 5]);
        mixed[2].image_id = "other".into();
        assert!(matches!(aggregate_votes(&mixed), Err(Error::MixedImages)));
    }

    fn blob(x0: usize, w: usize) -> PixelMask {
        PixelMask::from_fn(20, 10, |x, y| (x0..x0 + w).contains(&x) && (2..8).contains(&y)).unwrap()
    }

    #[test]
    fn drawings() {
        let m = blob(2, 5);
        let l = label_from_drawings("i", &[m.clone(), m.clone(), m.clone()]).unwrap();
        assert_eq!(l.label, Ambiguity::Unambiguous);
        assert_eq!(l.source, LabelSource::Drawers);

        let two = PixelMask::from_fn(20, 10, |x, y| (x < 3 || x > 15) && y < 4).unwrap();
        let l = label_from_drawings("i", &[two.clone(), two]).unwrap();
        assert_eq!(l.label, Ambiguity::Ambiguous);

        // 4 of 10 columns shared: 24 / 60 = 0.4
        let a = blob(0, 7);
        let b = blob(3, 7);
        assert!((iou(&a, &b).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(label_from_drawings("i", &[a, b]).unwrap().label, Ambiguity::Ambiguous);

        // exactly 0.5 is not "less than"
        let a = blob(0, 6);
        let b = blob(2, 6);
        assert_eq!(iou(&a, &b).unwrap(), 0.5);
        assert_eq!(label_from_drawings("i", &[a, b]).unwrap().label, Ambiguity::Unambiguous);

        assert!(matches!(
            label_from_drawings("i", &[blob(0, 3)]),
            Err(Error::TooFewMasks { .. })
        ));
        assert!(matches!(
            label_from_drawings("i", &[blob(0, 3), PixelMask::empty(20, 10).unwrap()]),
            Err(Error::EmptyMask)
        ));
    }

    proptest! {
        #[test]
        fn vote_order_irrelevant(pattern in proptest::collection::vec(any::<bool>(), 5), rot in 0usize..5) {
            let v = votes(&pattern);
            let mut r = v.clone();
            r.rotate_left(rot);
            r.reverse();
            prop_assert_eq!(aggregate_votes(&v).unwrap(), aggregate_votes(&r).unwrap());
        }

        #[test]
        fn drawing_order_and_duplicates_irrelevant(
            starts in proptest::collection::vec(0usize..12, 2..5),
            widths in proptest::collection::vec(1usize..8, 5),
            dup in 0usize..5,
        ) {
            let masks: Vec<_> = starts.iter().zip(&widths).map(|(&s, &w)| blob(s, w)).collect();
            let base = label_from_drawings("i", &masks).unwrap();
            let mut reversed = masks.clone();
            reversed.reverse();
            prop_assert_eq!(&base, &label_from_drawings("i", &reversed).unwrap());
            let mut extended = masks.clone();
            extended.push(masks[dup % masks.len()].clone());
            prop_assert_eq!(&base, &label_from_drawings("i", &extended).unwrap());
        }
    }
}
