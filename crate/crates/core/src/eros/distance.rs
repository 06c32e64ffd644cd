use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::covariance::covariance;
use super::eigen::{eigen, EigenDecomposition};
use super::weights::{compute_weights, EigenvalueMatrix, ErosWeights, WeightOptions};
use crate::error::{Error, Result};
use crate::sample::{MtsSample, SampleId};

fn check_dims(a: &EigenDecomposition, b: &EigenDecomposition, w: &ErosWeights) -> Result<()> {
    for found in [a.dim(), b.dim()] {
        if found != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                found,
            });
        }
    }
    Ok(())
}

/// Weighted sum of absolute cosines between corresponding eigenvectors,
/// clamped to `[0, 1]`.
pub fn eros(a: &EigenDecomposition, b: &EigenDecomposition, w: &ErosWeights) -> Result<f64> {
    check_dims(a, b, w)?;
    let sim: f64 = a
        .vectors()
        .column_iter()
        .zip(b.vectors().column_iter())
        .zip(w.as_vector().iter())
        .map(|((ai, bi), wi)| wi * ai.dot(&bi).abs())
        .sum();
    Ok(sim.clamp(0.0, 1.0))
}

/// `sqrt(2 - 2 * eros)`, exactly zero for identical eigenvector matrices.
pub fn eros_distance(
    a: &EigenDecomposition,
    b: &EigenDecomposition,
    w: &ErosWeights,
) -> Result<f64> {
    check_dims(a, b, w)?;
    if a.vectors() == b.vectors() {
        return Ok(0.0);
    }
    Ok(distance_from_similarity(eros(a, b, w)?))
}

pub fn distance_from_similarity(similarity: f64) -> f64 {
    (2.0 - 2.0 * similarity).max(0.0).sqrt()
}

/// Eigendecompositions of a set of samples.
#[derive(Debug, Clone)]
pub struct EigenSpace {
    ids: Vec<SampleId>,
    decompositions: Vec<EigenDecomposition>,
}

impl EigenSpace {
    /// Decomposes each sample's covariance matrix (in parallel).
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a MtsSample>) -> Result<Self> {
        let samples: Vec<&MtsSample> = samples.into_iter().collect();
        let decompositions = samples
            .par_iter()
            .map(|s| decompose(s))
            .collect::<Result<Vec<_>>>()?;
        let ids = samples.iter().map(|s| s.id().clone()).collect();
        Ok(Self {
            ids,
            decompositions,
        })
    }

    pub fn from_parts(ids: Vec<SampleId>, decompositions: Vec<EigenDecomposition>) -> Result<Self> {
        if ids.len() != decompositions.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                found: decompositions.len(),
            });
        }
        Ok(Self {
            ids,
            decompositions,
        })
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn decompositions(&self) -> &[EigenDecomposition] {
        &self.decompositions
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: SampleId, decomposition: EigenDecomposition) {
        self.ids.push(id);
        self.decompositions.push(decomposition);
    }

    pub fn weights(&self, opts: WeightOptions) -> Result<(ErosWeights, EigenvalueMatrix)> {
        compute_weights(self.ids.iter().zip(self.decompositions.iter()), opts)
    }

    /// Distances from `query` to every member, in member order.
    pub fn distances_to(&self, query: &EigenDecomposition, w: &ErosWeights) -> Result<Vec<f64>> {
        self.decompositions
            .par_iter()
            .map(|d| eros_distance(query, d, w))
            .collect()
    }

    /// Full pairwise distance matrix. Each unordered pair is evaluated once
    /// and mirrored; the diagonal is exactly zero.
    pub fn distance_matrix(&self, w: &ErosWeights) -> Result<DistanceMatrix> {
        let n = self.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| eros_distance(&self.decompositions[i], &self.decompositions[j], w))
            .collect::<Result<Vec<_>>>()?;
        let mut d = DMatrix::zeros(n, n);
        for (&(i, j), v) in pairs.iter().zip(values) {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        DistanceMatrix::new(self.ids.clone(), d)
    }
}

/// Covariance followed by eigendecomposition.
pub fn decompose(sample: &MtsSample) -> Result<EigenDecomposition> {
    eigen(&covariance(sample)?)
}

/// Pairwise Eros distances between labelled samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<SampleId>,
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(ids: Vec<SampleId>, values: DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.nrows(),
            });
        }
        Ok(Self { ids, values })
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn index_of(&self, id: &SampleId) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.values - self.values.transpose()).amax()
    }

    /// Delimited text: a header row and a first column of `<label>__<id>`
    /// keys. `decimals = None` writes shortest round-trip representations.
    pub fn to_csv(&self, decimals: Option<usize>) -> String {
        let mut out = String::new();
        for id in &self.ids {
            write!(out, ",{id}").unwrap();
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(&id.to_string());
            for j in 0..self.len() {
                let v = self.values[(i, j)];
                match decimals {
                    Some(d) => write!(out, ",{v:.d$}").unwrap(),
                    None => write!(out, ",{v}").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::MalformedRecord {
            file: "distance matrix".into(),
            line: line as u64,
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input".into()))?;
        let mut header_cells = header.split(',');
        if header_cells.next().map(str::trim) != Some("") {
            return Err(bad(1, "header must start with an empty cell".into()));
        }
        let ids = header_cells
            .map(|c| {
                SampleId::parse_key(c.trim()).ok_or_else(|| bad(1, format!("bad sample key `{c}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = ids.len();
        let mut values = DMatrix::zeros(n, n);
        let mut row = 0;
        for (idx, line) in lines {
            let mut cells = line.split(',');
            let key = cells.next().unwrap_or_default().trim();
            if row >= n || SampleId::parse_key(key).as_ref() != Some(&ids[row]) {
                return Err(bad(idx + 1, format!("unexpected row key `{key}`")));
            }
            let parsed = cells
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(idx + 1, format!("bad number `{c}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if parsed.len() != n {
                return Err(bad(
                    idx + 1,
                    format!("expected {n} values, found {}", parsed.len()),
                ));
            }
            for (j, v) in parsed.into_iter().enumerate() {
                values[(row, j)] = v;
            }
            row += 1;
        }
        if row != n {
            return Err(bad(0, format!("expected {n} rows, found {row}")));
        }
        Self::new(ids, values)
    }
}
