use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::diversity::{DiversityTable, Measure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Redundant annotations spent over the maximum `N * extra`.
    pub budget_fraction: f64,
    /// Diversity captured over the full-budget total.
    pub captured_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityCurve {
    pub strategy: String,
    pub measure: Measure,
    pub points: Vec<CurvePoint>,
    pub seeds_used: usize,
}

/// One line of a curve table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub strategy: String,
    pub measure: Measure,
    pub budget_fraction: f64,
    pub captured_fraction: f64,
    pub seeds_used: usize,
}

impl DiversityCurve {
    /// Captured fraction at `budget_fraction`, linearly interpolated between
    /// neighbouring points and clamped to the curve's range.
    pub fn value_at(&self, budget_fraction: f64) -> f64 {
        let pts = &self.points;
        let Some(first) = pts.first() else {
            return 0.0;
        };
        if budget_fraction <= first.budget_fraction {
            return first.captured_fraction;
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if budget_fraction <= b.budget_fraction {
                let t = (budget_fraction - a.budget_fraction) / (b.budget_fraction - a.budget_fraction);
                return a.captured_fraction + t * (b.captured_fraction - a.captured_fraction);
            }
        }
        pts.last().expect("non-empty").captured_fraction
    }

    pub fn rows(&self) -> Vec<CurveRow> {
        self.points
            .iter()
            .map(|p| CurveRow {
                strategy: self.strategy.clone(),
                measure: self.measure,
                budget_fraction: p.budget_fraction,
                captured_fraction: p.captured_fraction,
                seeds_used: self.seeds_used,
            })
            .collect()
    }
}

pub(crate) fn fraction(captured: f64, full: f64) -> f64 {
    if full > 0.0 {
        (captured / full).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Budget-vs-diversity curve for one or more priority orderings (several
/// orderings = one per seed of a randomized strategy, averaged).
///
/// The point for budget `B` counts the first annotation of every image plus
/// `extra` redundant annotations for the first `B` images of the ordering.
pub fn budget_diversity_curve(
    strategy: &str,
    orderings: &[Vec<String>],
    table: &DiversityTable,
    extra: usize,
    measure: Measure,
) -> Result<DiversityCurve> {
    if orderings.is_empty() || table.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = table.len();
    let full = table.full_total(extra, measure)?;
    let base = table.first_term(measure);
    let mut sums = vec![0.0; n + 1];
    for order in orderings {
        check_permutation(order, table)?;
        let mut captured = base;
        sums[0] += fraction(captured, full);
        for (b, id) in order.iter().enumerate() {
            captured += table.redundant(id, extra, measure)?;
            sums[b + 1] += fraction(captured, full);
        }
    }
    let k = orderings.len() as f64;
    let points = sums
        .into_iter()
        .enumerate()
        .map(|(b, s)| CurvePoint {
            budget_fraction: b as f64 / n as f64,
            captured_fraction: s / k,
        })
        .collect();
    Ok(DiversityCurve {
        strategy: strategy.to_string(),
        measure,
        points,
        seeds_used: orderings.len(),
    })
}

fn check_permutation(order: &[String], table: &DiversityTable) -> Result<()> {
    let seen: BTreeSet<&String> = order.iter().collect();
    if seen.len() != order.len() {
        return Err(Error::parse("ordering repeats an image"));
    }
    if let Some(id) = table.image_ids().find(|id| !seen.contains(id)) {
        return Err(Error::MissingScore(id.clone()));
    }
    if let Some(id) = order.iter().find(|id| !table.scores().contains_key(*id)) {
        return Err(Error::UnknownImage(id.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{perfect_order, random_order};
    use crate::diversity::DiversityScore;
    use rand::{Rng, SeedableRng};

    fn random_table(n: usize, extra: usize, seed: u64) -> DiversityTable {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DiversityTable::from_scores(
            (0..n)
                .map(|i| {
                    let scale = if rng.random_bool(0.3) { 1.0 } else { 0.05 };
                    (
                        format!("img{i:02}"),
                        (0..=extra)
                            .map(|_| DiversityScore {
                                region: scale * rng.random_range(0.0..1.0),
                                boundary: Some(scale * rng.random_range(0.0..20.0)),
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn anchors_and_monotone() {
        let t = random_table(12, 4, 1);
        let order = random_order(&t.image_ids().cloned().collect::<Vec<_>>(), 3);
        for m in Measure::ALL {
            let c = budget_diversity_curve("x", &[order.clone()], &t, 4, m).unwrap();
            let full = t.full_total(4, m).unwrap();
            assert_eq!(c.points.len(), 13);
            assert!((c.points[0].captured_fraction - t.first_term(m) / full).abs() < 1e-12);
            assert!((c.points[12].captured_fraction - 1.0).abs() < 1e-12);
            assert_eq!(c.points[0].budget_fraction, 0.0);
            assert_eq!(c.points[12].budget_fraction, 1.0);
            for w in c.points.windows(2) {
                assert!(w[1].budget_fraction > w[0].budget_fraction);
                assert!(w[1].captured_fraction >= w[0].captured_fraction);
            }
        }
    }

    #[test]
    fn perfect_dominates_status_quo_mean() {
        for seed in 0..5 {
            let t = random_table(15, 4, seed);
            let ids: Vec<String> = t.image_ids().cloned().collect();
            for m in Measure::ALL {
                let perfect = budget_diversity_curve("perfect", &[perfect_order(&t, 4, m).unwrap()], &t, 4, m).unwrap();
                let orderings: Vec<_> = (0..20).map(|s| random_order(&ids, s)).collect();
                let sq = budget_diversity_curve("status-quo", &orderings, &t, 4, m).unwrap();
                assert_eq!(sq.seeds_used, 20);
                for (p, q) in perfect.points.iter().zip(&sq.points) {
                    assert!(p.captured_fraction >= q.captured_fraction - 1e-12);
                }
            }
        }
    }

    #[test]
    fn interpolation() {
        let c = DiversityCurve {
            strategy: "x".into(),
            measure: Measure::Region,
            points: vec![
                CurvePoint { budget_fraction: 0.0, captured_fraction: 0.2 },
                CurvePoint { budget_fraction: 0.5, captured_fraction: 0.6 },
                CurvePoint { budget_fraction: 1.0, captured_fraction: 1.0 },
            ],
            seeds_used: 1,
        };
        assert!((c.value_at(0.25) - 0.4).abs() < 1e-12);
        assert_eq!(c.value_at(0.5), 0.6);
        assert_eq!(c.value_at(-1.0), 0.2);
        assert_eq!(c.value_at(2.0), 1.0);
    }

    #[test]
    fn bad_orderings() {
        let t = random_table(3, 1, 2);
        let short = vec!["img00".to_string(), "img01".to_string()];
        assert!(matches!(
            budget_diversity_curve("x", &[short], &t, 1, Measure::Region),
            Err(Error::MissingScore(_))
        ));
    }
}
