//! Retrieval evaluation in the Eros distance space: modified leave-one-out
//! KNN, precision/recall curves and nearest-neighbor classification.

mod classify;
mod knn;

pub use classify::{
    classify_unknown, export_embedding_input, ClassificationResult, ClassifyOptions, LabelScore,
    Neighbor,
};
pub use knn::{
    knn_until_r, neighbors, pr_curve, pr_curve_from_matrix, PrCurve, PrPoint, QueryResult,
    DEFAULT_MAXR,
};
