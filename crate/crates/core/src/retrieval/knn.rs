use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::db::SignatureDatabase;
use crate::eros::{database_distances, DistanceMatrix, WeightOptions};
use crate::error::{Error, Result};
use crate::sample::SampleId;

pub const DEFAULT_MAXR: usize = 5;

/// Indices of every item except `query`, nearest first.
///
/// Equal distances are ordered by `(label, collection_id)`.
pub fn neighbors(dm: &DistanceMatrix, query: usize) -> Vec<usize> {
    let ids = dm.ids();
    let mut order: Vec<usize> = (0..dm.len()).filter(|&j| j != query).collect();
    order.sort_by(|&a, &b| {
        dm.get(query, a)
            .total_cmp(&dm.get(query, b))
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub query: SampleId,
    /// Relevant (same-label) items sought.
    pub r: usize,
    /// Neighbors examined to find them.
    pub k: usize,
    pub precision: f64,
}

/// Neighbor counts needed to reach 1, 2, ... `maxr` same-label items.
fn ks_for_query(dm: &DistanceMatrix, query: usize, maxr: usize) -> Vec<usize> {
    let label = &dm.ids()[query].label;
    let mut ks = Vec::with_capacity(maxr);
    for (pos, j) in neighbors(dm, query).into_iter().enumerate() {
        if ks.len() == maxr {
            break;
        }
        if &dm.ids()[j].label == label {
            ks.push(pos + 1);
        }
    }
    ks
}

/// Grows `k` from 1 until the `k` nearest neighbors of `query` (excluding
/// itself) contain exactly `r` items with the query's label.
pub fn knn_until_r(query: &SampleId, dm: &DistanceMatrix, r: usize) -> Result<QueryResult> {
    let q = dm
        .index_of(query)
        .ok_or_else(|| Error::UnknownSample(query.to_string()))?;
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    let available = dm
        .ids()
        .iter()
        .enumerate()
        .filter(|&(j, id)| j != q && id.label == query.label)
        .count();
    if available < r {
        return Err(Error::NotEnoughRelevant { r, available });
    }
    let k = ks_for_query(dm, q, r)[r - 1];
    Ok(QueryResult {
        query: query.clone(),
        r,
        k,
        precision: r as f64 / k as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub r: usize,
    pub recall: f64,
    pub avg_precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurve {
    pub maxr: usize,
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// `recall,avg_precision` rows, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("recall,avg_precision\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.recall, p.avg_precision));
        }
        out
    }
}

/// Errors unless every label has at least `maxr` other samples.
fn check_maxr<'a>(labels: impl Iterator<Item = &'a str>, maxr: usize) -> Result<()> {
    if maxr == 0 {
        return Err(Error::InvalidArgument("maxr must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    // BTreeMap iteration makes the lexicographically first label win ties.
    if let Some((label, count)) = counts.iter().min_by_key(|(_, &c)| c) {
        let available = count - 1;
        if available < maxr {
            return Err(Error::MaxrTooLarge {
                maxr,
                label: (*label).to_owned(),
                available,
            });
        }
    }
    Ok(())
}

/// Modified leave-one-out KNN over a precomputed distance matrix.
///
/// For each `r` in `1..=maxr`, the precision `r / k` of every query is summed
/// and divided by the number of queries; recall is `r / maxr`.
pub fn pr_curve_from_matrix(dm: &DistanceMatrix, maxr: usize) -> Result<PrCurve> {
    check_maxr(dm.ids().iter().map(|id| id.label.as_str()), maxr)?;
    let n = dm.len();
    let per_query: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|q| ks_for_query(dm, q, maxr))
        .collect();
    let points = (1..=maxr)
        .map(|r| {
            let total: f64 = per_query.iter().map(|ks| r as f64 / ks[r - 1] as f64).sum();
            PrPoint {
                r,
                recall: r as f64 / maxr as f64,
                avg_precision: total / n as f64,
            }
        })
        .collect();
    Ok(PrCurve { maxr, points })
}

/// Computes weights and distances over `db`, then the precision/recall curve.
pub fn pr_curve(db: &SignatureDatabase, maxr: usize, opts: WeightOptions) -> Result<PrCurve> {
    db.require_comparable()?;
    check_maxr(db.samples().iter().map(|s| s.label()), maxr)?;
    let (_, dm) = database_distances(db, opts)?;
    pr_curve_from_matrix(&dm, maxr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn matrix(ids: &[(&str, u64)], upper: &[f64]) -> DistanceMatrix {
        let n = ids.len();
        let mut d = DMatrix::zeros(n, n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().unwrap();
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        DistanceMatrix::new(ids.iter().map(|&(l, c)| SampleId::new(l, c)).collect(), d).unwrap()
    }

    #[test]
    fn immediate_hit() {
        let dm = matrix(&[("A", 0), ("A", 1), ("B", 0)], &[0.1, 0.5, 0.6]);
        let res = knn_until_r(&SampleId::new("A", 0), &dm, 1).unwrap();
        assert_eq!((res.k, res.precision), (1, 1.0));
    }

    #[test]
    fn relevant_at_ranks_two_and_three() {
        // From q = A0: B0 0.1, A1 0.2, A2 0.3, B1 0.4.
        let dm = matrix(
            &[("A", 0), ("B", 0), ("A", 1), ("A", 2), ("B", 1)],
            &[0.1, 0.2, 0.3, 0.4, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9],
        );
        let res = knn_until_r(&SampleId::new("A", 0), &dm, 2).unwrap();
        assert_eq!(res.k, 3);
        assert!((res.precision - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn not_enough_relevant() {
        let dm = matrix(&[("A", 0), ("A", 1), ("B", 0)], &[0.1, 0.5, 0.6]);
        assert!(matches!(
            knn_until_r(&SampleId::new("A", 0), &dm, 2),
            Err(Error::NotEnoughRelevant { r: 2, available: 1 })
        ));
    }

    #[test]
    fn ties_broken_by_label_then_id() {
        let dm = matrix(
            &[("B", 0), ("A", 1), ("C", 0), ("B", 1)],
            &[0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
        );
        let order: Vec<_> = neighbors(&dm, 0)
            .into_iter()
            .map(|j| dm.ids()[j].to_string())
            .collect();
        assert_eq!(order, ["A__1", "B__1", "C__0"]);
    }

    #[test]
    fn maxr_too_large_names_label() {
        let dm = matrix(
            &[("A", 0), ("A", 1), ("B", 0), ("B", 1), ("B", 2)],
            &[0.1; 10],
        );
        match pr_curve_from_matrix(&dm, 2) {
            Err(Error::MaxrTooLarge {
                label, available, ..
            }) => {
                assert_eq!(label, "A");
                assert_eq!(available, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn recalls_are_r_over_maxr() {
        let ids: Vec<(String, u64)> = (0..18).map(|i| (format!("L{}", i % 3), i as u64)).collect();
        let refs: Vec<(&str, u64)> = ids.iter().map(|(l, c)| (l.as_str(), *c)).collect();
        let upper = vec![0.5; 18 * 17 / 2];
        let curve = pr_curve_from_matrix(&matrix(&refs, &upper), 5).unwrap();
        let recalls: Vec<f64> = curve.points.iter().map(|p| p.recall).collect();
        assert_eq!(recalls, [0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(curve.to_csv().lines().next(), Some("recall,avg_precision"));
    }
}
