use std::collections::BTreeMap;

use serde::Serialize;

use crate::db::SignatureDatabase;
use crate::eros::{decompose, DistanceMatrix, EigenSpace, WeightOptions};
use crate::error::{Error, Result};
use crate::sample::MtsSample;
use crate::SampleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub k: usize,
    pub weights: WeightOptions,
    /// Use weights from the database alone instead of the database plus the
    /// unknown sample.
    pub freeze_weights: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            k: 5,
            weights: WeightOptions::default(),
            freeze_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: SampleId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelScore {
    pub label: String,
    /// Smallest distance from the unknown to any sample of this label.
    pub best_distance: f64,
    /// Occurrences among the `k` nearest neighbors.
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub k: usize,
    pub neighbors: Vec<Neighbor>,
    /// Every database label, ascending by best distance.
    pub ranking: Vec<LabelScore>,
    pub chosen: String,
}

impl ClassificationResult {
    pub fn to_text(&self) -> String {
        let mut out = format!("chosen: {}\nk: {}\n\n", self.chosen, self.k);
        out.push_str(&format!(
            "{:<24} {:>14} {:>6}\n",
            "label", "best_distance", "votes"
        ));
        for s in &self.ranking {
            out.push_str(&format!(
                "{:<24} {:>14.6} {:>6}\n",
                s.label, s.best_distance, s.votes
            ));
        }
        out.push_str("\nnearest neighbors:\n");
        for (rank, n) in self.neighbors.iter().enumerate() {
            out.push_str(&format!(
                "{:>4}  {:<28} {:.6}\n",
                rank + 1,
                n.id.to_string(),
                n.distance
            ));
        }
        out
    }
}

/// Nearest-neighbor classification of a sample that is not in the database.
///
/// The winner is the plurality label among the `k` nearest samples; ties go
/// to the smaller best distance, then to the lexicographically smaller label.
pub fn classify_unknown(
    db: &SignatureDatabase,
    unknown: &MtsSample,
    opts: ClassifyOptions,
) -> Result<ClassificationResult> {
    db.require_comparable()?;
    let unknown = unknown.clone().canonicalize(db.schema())?;
    if opts.k == 0 || opts.k > db.len() {
        return Err(Error::KTooLarge {
            k: opts.k,
            n: db.len(),
        });
    }

    let mut space = EigenSpace::from_samples(db.samples())?;
    let query = decompose(&unknown)?;
    let w = if opts.freeze_weights {
        space.weights(opts.weights)?.0
    } else {
        let db_only = space.clone();
        space.push(unknown.id().clone(), query.clone());
        let w = space.weights(opts.weights)?.0;
        space = db_only;
        w
    };
    let distances = space.distances_to(&query, &w)?;

    let mut order: Vec<usize> = (0..db.len()).collect();
    let ids = space.ids();
    order.sort_by(|&a, &b| {
        distances[a]
            .total_cmp(&distances[b])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let neighbors: Vec<Neighbor> = order[..opts.k]
        .iter()
        .map(|&i| Neighbor {
            id: ids[i].clone(),
            distance: distances[i],
        })
        .collect();

    let mut scores: BTreeMap<&str, LabelScore> = BTreeMap::new();
    for (id, &d) in ids.iter().zip(&distances) {
        let entry = scores
            .entry(id.label.as_str())
            .or_insert_with(|| LabelScore {
                label: id.label.clone(),
                best_distance: f64::INFINITY,
                votes: 0,
            });
        entry.best_distance = entry.best_distance.min(d);
    }
    for n in &neighbors {
        scores
            .get_mut(n.id.label.as_str())
            .expect("label seen")
            .votes += 1;
    }
    let mut ranking: Vec<LabelScore> = scores.into_values().collect();
    ranking.sort_by(|a, b| {
        a.best_distance
            .total_cmp(&b.best_distance)
            .then_with(|| a.label.cmp(&b.label))
    });
    let chosen = ranking
        .iter()
        .min_by(|a, b| {
            b.votes
                .cmp(&a.votes)
                .then_with(|| a.best_distance.total_cmp(&b.best_distance))
                .then_with(|| a.label.cmp(&b.label))
        })
        .expect("non-empty database")
        .label
        .clone();

    Ok(ClassificationResult {
        k: opts.k,
        neighbors,
        ranking,
        chosen,
    })
}

/// Pairwise distances over the database, with `unknown` appended as the final
/// row and column when given. Weights cover every included sample.
pub fn export_embedding_input(
    db: &SignatureDatabase,
    unknown: Option<&MtsSample>,
    opts: WeightOptions,
) -> Result<DistanceMatrix> {
    db.require_comparable()?;
    let mut space = EigenSpace::from_samples(db.samples())?;
    if let Some(u) = unknown {
        let u = u.clone().canonicalize(db.schema())?;
        if db.get(u.id()).is_some() {
            return Err(Error::DuplicateSample {
                label: u.label().to_owned(),
                collection_id: u.collection_id(),
            });
        }
        space.push(u.id().clone(), decompose(&u)?);
    }
    let (w, _) = space.weights(opts)?;
    space.distance_matrix(&w)
}
