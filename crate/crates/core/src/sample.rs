//! Shared domain types: metric schemas, sample identifiers and telemetry samples.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Telemetry source format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// OS-level counters exported from sysstat, one row per epoch second.
    Sar,
    /// Hardware event counters from `perf stat -I`, keyed by elapsed seconds.
    Perf,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Sar => "sar",
            Dialect::Perf => "perf",
        })
    }
}

impl FromStr for Dialect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sar" => Ok(Dialect::Sar),
            "perf" => Ok(Dialect::Perf),
            other => Err(Error::InvalidArgument(format!("unknown dialect `{other}`"))),
        }
    }
}

/// Ordered list of metric column names.
///
/// Two schemas are compatible iff their names are identical and in the same
/// order. The timestamp column is never part of a schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSchema {
    names: Vec<String>,
    dialect: Dialect,
}

impl MetricSchema {
    pub fn new(names: Vec<String>, dialect: Dialect) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidSchema("no metric columns".into()));
        }
        let mut seen = HashSet::with_capacity(names.len());
        for name in &names {
            if name.is_empty() {
                return Err(Error::InvalidSchema("empty metric name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate metric `{name}`")));
            }
        }
        Ok(Self { names, dialect })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn is_compatible(&self, other: &MetricSchema) -> bool {
        self.names == other.names
    }

    /// Column permutation mapping `other` onto this schema's order, if both
    /// schemas hold the same set of names. `perm[i]` is the column of `other`
    /// that lands in position `i`.
    pub fn permutation_from(&self, other: &MetricSchema) -> Result<Vec<usize>> {
        let mismatch = |column: &str| Error::SchemaMismatch {
            column: column.to_owned(),
            expected: self.len(),
            found: other.len(),
        };
        let mut perm = Vec::with_capacity(self.len());
        for name in &self.names {
            let pos = other
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| mismatch(name))?;
            perm.push(pos);
        }
        if other.len() != self.len() {
            let extra = other
                .names
                .iter()
                .find(|n| !self.names.contains(n))
                .expect("longer schema has a name outside the shorter one");
            return Err(mismatch(extra));
        }
        Ok(perm)
    }
}

/// `(label, collection_id)`: the identity of one workload execution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleId {
    pub label: String,
    pub collection_id: u64,
}

impl SampleId {
    pub fn new(label: impl Into<String>, collection_id: u64) -> Self {
        Self {
            label: label.into(),
            collection_id,
        }
    }

    /// Parses the `<label>__<collection_id>` form used for file and column names.
    pub fn parse_key(key: &str) -> Option<Self> {
        let (label, id) = key.rsplit_once("__")?;
        let collection_id = id.parse().ok()?;
        (!label.is_empty()).then(|| Self::new(label, collection_id))
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}__{}", self.label, self.collection_id)
    }
}

/// Labels end up in file names and delimited headers.
pub(crate) fn validate_label(label: &str) -> Result<()> {
    let bad = label.is_empty()
        || label.starts_with('.')
        || label
            .chars()
            .any(|c| c.is_control() || matches!(c, '/' | '\\' | ',' | ';' | '"' | ':'));
    if bad {
        return Err(Error::InvalidSample(format!("invalid label `{label}`")));
    }
    Ok(())
}

/// One workload execution's telemetry: `m` time steps by `n` metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MtsSample {
    id: SampleId,
    schema: MetricSchema,
    data: DMatrix<f64>,
    start_epoch: Option<i64>,
}

impl MtsSample {
    /// Builds a sample, enforcing `m >= 2`, `n == schema.len()` and finiteness.
    pub fn new(
        id: SampleId,
        schema: MetricSchema,
        data: DMatrix<f64>,
        start_epoch: Option<i64>,
    ) -> Result<Self> {
        validate_label(&id.label)?;
        if data.ncols() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                found: data.ncols(),
            });
        }
        if data.nrows() < 2 {
            return Err(Error::TooFewRows {
                context: id.to_string(),
                rows: data.nrows(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let rows = data.nrows();
            return Err(Error::InvalidSample(format!(
                "{id}: non-finite value at row {}, column `{}`",
                pos % rows,
                schema.names()[pos / rows]
            )));
        }
        Ok(Self {
            id,
            schema,
            data,
            start_epoch,
        })
    }

    /// Builds a sample from row-major values.
    pub fn from_rows(
        id: SampleId,
        schema: MetricSchema,
        rows: &[Vec<f64>],
        start_epoch: Option<i64>,
    ) -> Result<Self> {
        let n = schema.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let data = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        Self::new(id, schema, data, start_epoch)
    }

    pub fn id(&self) -> &SampleId {
        &self.id
    }

    pub fn label(&self) -> &str {
        &self.id.label
    }

    pub fn collection_id(&self) -> u64 {
        self.id.collection_id
    }

    pub fn schema(&self) -> &MetricSchema {
        &self.schema
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn start_epoch(&self) -> Option<i64> {
        self.start_epoch
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn metrics(&self) -> usize {
        self.data.ncols()
    }

    pub fn with_id(mut self, id: SampleId) -> Result<Self> {
        validate_label(&id.label)?;
        self.id = id;
        Ok(self)
    }

    /// Reorders columns to match `target`. Fails if the name sets differ.
    pub fn canonicalize(self, target: &MetricSchema) -> Result<Self> {
        if self.schema.is_compatible(target) {
            return Ok(self);
        }
        let perm = target.permutation_from(&self.schema)?;
        let data = DMatrix::from_fn(self.data.nrows(), perm.len(), |i, j| {
            self.data[(i, perm[j])]
        });
        Ok(Self {
            id: self.id,
            schema: target.clone(),
            data,
            start_epoch: self.start_epoch,
        })
    }
}
