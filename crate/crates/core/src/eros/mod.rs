//! Eros similarity between covariance eigenstructures.
//!
//! Each sample is mapped to the eigenvectors of its covariance matrix. Two
//! samples are compared by the weighted sum of absolute cosines between their
//! corresponding eigenvectors, with weights aggregated from the eigenvalue
//! spectra of the whole database. The distance is `sqrt(2 - 2 * eros)`.

mod covariance;
mod distance;
mod eigen;
mod weights;

pub use covariance::{covariance, covariance_of, CovarianceScaling};
pub use distance::{
    decompose, distance_from_similarity, eros, eros_distance, DistanceMatrix, EigenSpace,
};
pub use eigen::{eigen, EigenDecomposition, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};
pub use weights::{compute_weights, Aggregator, EigenvalueMatrix, ErosWeights, WeightOptions};

use crate::db::SignatureDatabase;
use crate::error::Result;

/// Weights over the whole database, as used for its distance matrix.
pub fn database_weights(
    db: &SignatureDatabase,
    opts: WeightOptions,
) -> Result<(ErosWeights, EigenvalueMatrix)> {
    db.require_comparable()?;
    EigenSpace::from_samples(db.samples())?.weights(opts)
}

/// Pairwise distance matrix of a database under the given weights.
pub fn distance_matrix(db: &SignatureDatabase, w: &ErosWeights) -> Result<DistanceMatrix> {
    db.require_comparable()?;
    EigenSpace::from_samples(db.samples())?.distance_matrix(w)
}

/// Weights and distance matrix in one pass over the eigendecompositions.
pub fn database_distances(
    db: &SignatureDatabase,
    opts: WeightOptions,
) -> Result<(ErosWeights, DistanceMatrix)> {
    db.require_comparable()?;
    let space = EigenSpace::from_samples(db.samples())?;
    let (w, _) = space.weights(opts)?;
    let d = space.distance_matrix(&w)?;
    Ok((w, d))
}
