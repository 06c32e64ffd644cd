//! Workload similarity from performance telemetry.
//!
//! A workload execution is recorded as a multivariate time series of
//! performance metrics (SAR OS counters or perf hardware events). Executions
//! of different lengths are compared through the eigenvectors of their
//! covariance matrices using the Eros similarity, and retrieval quality over
//! a labeled database is measured with a modified leave-one-out KNN.
//!
//! ```no_run
//! use wsig_core::{db::SignatureDatabase, eros, retrieval};
//!
//! let db = SignatureDatabase::load("signatures")?;
//! let (weights, distances) = eros::database_distances(&db, Default::default())?;
//! let curve = retrieval::pr_curve_from_matrix(&distances, 5)?;
//! # let _ = (weights, curve);
//! # Ok::<(), wsig_core::Error>(())
//! ```

pub mod db;
pub mod eros;
pub mod error;
pub mod ingest;
pub mod retrieval;
pub mod sample;
pub mod synthetic;

pub use db::{DbStats, SignatureDatabase};
pub use eros::{Aggregator, DistanceMatrix, EigenDecomposition, ErosWeights, WeightOptions};
pub use error::{Error, ErrorKind, Result};
pub use retrieval::{ClassificationResult, ClassifyOptions, PrCurve, QueryResult};
pub use sample::{Dialect, MetricSchema, MtsSample, SampleId};
