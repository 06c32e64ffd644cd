use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::sample::SampleId;

/// Row-wise aggregation applied to the eigenvalue matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
    Max,
    Min,
}

impl Aggregator {
    fn apply(self, row: impl Iterator<Item = f64>) -> f64 {
        match self {
            Aggregator::Mean => {
                let (sum, count) = row.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                sum / count as f64
            }
            Aggregator::Max => row.fold(f64::NEG_INFINITY, f64::max),
            Aggregator::Min => row.fold(f64::INFINITY, f64::min),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Mean => "mean",
            Aggregator::Max => "max",
            Aggregator::Min => "min",
        })
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregator::Mean),
            "max" => Ok(Aggregator::Max),
            "min" => Ok(Aggregator::Min),
            other => Err(Error::InvalidArgument(format!(
                "unknown aggregator `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightOptions {
    pub aggregator: Aggregator,
    /// Scale each sample's eigenvalues to sum to 1 before aggregation.
    pub normalize_eigenvalues: bool,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            aggregator: Aggregator::Mean,
            normalize_eigenvalues: true,
        }
    }
}

/// Non-negative per-component weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ErosWeights(DVector<f64>);

impl ErosWeights {
    /// Normalizes raw non-negative weights to sum to 1.
    pub fn from_raw(raw: DVector<f64>) -> Result<Self> {
        if raw.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = raw.sum();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self(raw / total))
    }

    /// Equal weights `1/n`.
    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The `n x N` matrix whose column `j` holds the eigenvalues of sample `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueMatrix(DMatrix<f64>);

impl EigenvalueMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Builds the eigenvalue matrix from `decompositions` and aggregates its rows
/// into weights.
pub fn compute_weights<'a>(
    decompositions: impl IntoIterator<Item = (&'a SampleId, &'a EigenDecomposition)>,
    opts: WeightOptions,
) -> Result<(ErosWeights, EigenvalueMatrix)> {
    let mut columns = Vec::new();
    let mut dim = None;
    for (id, decomp) in decompositions {
        let n = *dim.get_or_insert(decomp.dim());
        if decomp.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: decomp.dim(),
            });
        }
        let total = decomp.values().sum();
        if total <= 0.0 {
            return Err(Error::AllConstantSample {
                label: id.label.clone(),
                collection_id: id.collection_id,
            });
        }
        let column = if opts.normalize_eigenvalues {
            decomp.values() / total
        } else {
            decomp.values().clone()
        };
        columns.push(column);
    }
    if columns.is_empty() {
        return Err(Error::TooFewSamples {
            found: 0,
            required: 1,
        });
    }
    let s = DMatrix::from_columns(&columns);
    let raw = DVector::from_fn(s.nrows(), |i, _| {
        opts.aggregator.apply(s.row(i).iter().copied())
    });
    Ok((ErosWeights::from_raw(raw)?, EigenvalueMatrix(s)))
}
