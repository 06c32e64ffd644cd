use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data, schema problems, I/O, persistence.
    Data,
    /// Numerical failure: solver did not converge, degenerate spectra.
    Numeric,
    /// A caller-supplied argument is out of range.
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: no data rows")]
    EmptyFile { file: String },

    #[error("{file}:{line}: {reason}")]
    MalformedRecord {
        file: String,
        line: u64,
        reason: String,
    },

    #[error("{file}:{line}: timestamp {timestamp} is earlier than the previous row")]
    NonMonotonicTimestamps {
        file: String,
        line: u64,
        timestamp: i64,
    },

    #[error("{file}:{line}: negative elapsed time {elapsed}")]
    NegativeElapsed {
        file: String,
        line: u64,
        elapsed: f64,
    },

    #[error("{context}: only {rows} usable row(s), at least 2 are required")]
    TooFewRows { context: String, rows: usize },

    #[error("invalid metric schema: {0}")]
    InvalidSchema(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("schema mismatch at column `{column}` (database has {expected} metrics, sample has {found})")]
    SchemaMismatch {
        column: String,
        expected: usize,
        found: usize,
    },

    #[error("sample ({label}, {collection_id}) is already in the database")]
    DuplicateSample { label: String, collection_id: u64 },

    #[error("database has {found} sample(s), at least {required} are required")]
    TooFewSamples { found: usize, required: usize },

    #[error("corrupt manifest {path}: {reason}")]
    CorruptManifest { path: PathBuf, reason: String },

    #[error("sample file {path} listed in the manifest does not exist")]
    MissingSampleFile { path: PathBuf },

    #[error("{path}: manifest declares {expected} rows but the file holds {found}")]
    RowCountMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("sample ({label}, {collection_id}) has zero total variance")]
    AllConstantSample { label: String, collection_id: u64 },

    #[error("aggregated weights sum to zero")]
    DegenerateWeights,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sample {0} is not in the distance matrix")]
    UnknownSample(String),

    #[error("r = {r} relevant items requested but only {available} are available")]
    NotEnoughRelevant { r: usize, available: usize },

    #[error("maxr = {maxr} is too large: label `{label}` has only {available} other sample(s)")]
    MaxrTooLarge {
        maxr: usize,
        label: String,
        available: usize,
    },

    #[error("k = {k} is out of range for a database of {n} samples")]
    KTooLarge { k: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotSymmetric { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::NoConvergence { .. }
            | Error::AllConstantSample { .. }
            | Error::DegenerateWeights => ErrorKind::Numeric,
            Error::MaxrTooLarge { .. } | Error::KTooLarge { .. } | Error::InvalidArgument(_) => {
                ErrorKind::Usage
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
