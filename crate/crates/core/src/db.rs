//! Labeled signature database and its on-disk layout.
//!
//! A database directory holds a `manifest.json` plus one
//! `<label>__<collection_id>.csv` file per sample. Sample files store the
//! matrix with a header row of metric names and every value written with 17
//! significant digits, so a save/load cycle reproduces each `f64` exactly.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Dialect, MetricSchema, MtsSample, SampleId};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureDatabase {
    schema: MetricSchema,
    samples: Vec<MtsSample>,
}

impl SignatureDatabase {
    pub fn new(schema: MetricSchema) -> Self {
        Self {
            schema,
            samples: Vec::new(),
        }
    }

    /// Builds a database from samples, validating every invariant.
    pub fn from_samples(
        schema: MetricSchema,
        samples: impl IntoIterator<Item = MtsSample>,
    ) -> Result<Self> {
        let mut db = Self::new(schema);
        for s in samples {
            db.add(s)?;
        }
        Ok(db)
    }

    pub fn schema(&self) -> &MetricSchema {
        &self.schema
    }

    pub fn dialect(&self) -> Dialect {
        self.schema.dialect()
    }

    pub fn samples(&self) -> &[MtsSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.samples.iter().map(MtsSample::label).collect()
    }

    pub fn ids(&self) -> Vec<SampleId> {
        self.samples.iter().map(|s| s.id().clone()).collect()
    }

    pub fn get(&self, id: &SampleId) -> Option<&MtsSample> {
        self.samples.iter().find(|s| s.id() == id)
    }

    /// Next unused collection id for `label`.
    pub fn next_collection_id(&self, label: &str) -> u64 {
        self.samples
            .iter()
            .filter(|s| s.label() == label)
            .map(|s| s.collection_id() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Adds a sample. Columns are reordered to the database order when the
    /// sample holds the same metric names in a different order.
    pub fn add(&mut self, sample: MtsSample) -> Result<()> {
        let sample = sample.canonicalize(&self.schema)?;
        if self.get(sample.id()).is_some() {
            return Err(Error::DuplicateSample {
                label: sample.label().to_owned(),
                collection_id: sample.collection_id(),
            });
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Value-returning form of [`SignatureDatabase::add`].
    pub fn with_sample(mut self, sample: MtsSample) -> Result<Self> {
        self.add(sample)?;
        Ok(self)
    }

    /// Fails unless the database holds enough samples to compare.
    pub fn require_comparable(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::TooFewSamples {
                found: self.samples.len(),
                required: 2,
            });
        }
        Ok(())
    }

    pub fn stats(&self) -> DbStats {
        let mut per_label = BTreeMap::new();
        for s in &self.samples {
            *per_label.entry(s.label().to_owned()).or_insert(0usize) += 1;
        }
        let total = self.samples.len();
        let mean_length = if total == 0 {
            0.0
        } else {
            self.samples.iter().map(|s| s.rows() as f64).sum::<f64>() / total as f64
        };
        DbStats {
            variable_count: self.schema.len(),
            mean_length,
            average_length: mean_length.round() as usize,
            label_count: per_label.len(),
            samples_per_label: per_label,
            total,
        }
    }

    /// Writes the database to `dir`, replacing any previous contents.
    ///
    /// Files are staged in a sibling temporary directory which is then
    /// renamed into place.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".wsig-db-")
            .tempdir_in(&parent)
            .map_err(|e| Error::io(&parent, e))?;

        let mut entries = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let file = format!("{}.csv", s.id());
            write_matrix(&staging.path().join(&file), &self.schema, s.data())?;
            entries.push(ManifestEntry {
                label: s.label().to_owned(),
                collection_id: s.collection_id(),
                row_count: s.rows(),
                file,
                start_epoch: s.start_epoch(),
            });
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            dialect: self.schema.dialect(),
            schema: self.schema.names().to_vec(),
            samples: entries,
        };
        let manifest_path = staging.path().join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;

        let staged = staging.keep();
        let backup = parent.join(format!(
            ".wsig-db-old-{}",
            staged.file_name().and_then(|n| n.to_str()).unwrap_or("x")
        ));
        let had_previous = dir.exists();
        if had_previous {
            fs::rename(dir, &backup).map_err(|e| Error::io(dir, e))?;
        }
        if let Err(e) = fs::rename(&staged, dir) {
            if had_previous {
                let _ = fs::rename(&backup, dir);
            }
            let _ = fs::remove_dir_all(&staged);
            return Err(Error::io(dir, e));
        }
        if had_previous {
            fs::remove_dir_all(&backup).map_err(|e| Error::io(&backup, e))?;
        }
        Ok(())
    }

    /// Loads and re-validates a database directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST_FILE);
        let corrupt = |reason: String| Error::CorruptManifest {
            path: manifest_path.clone(),
            reason,
        };
        let text = fs::read_to_string(&manifest_path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => corrupt("manifest file not found".into()),
            _ => Error::io(&manifest_path, e),
        })?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(corrupt(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        let schema = MetricSchema::new(manifest.schema.clone(), manifest.dialect)
            .map_err(|e| corrupt(e.to_string()))?;

        let mut listed = HashSet::new();
        let mut db = Self::new(schema);
        for entry in &manifest.samples {
            let id = SampleId::new(entry.label.clone(), entry.collection_id);
            let expected_file = format!("{id}.csv");
            if entry.file != expected_file {
                return Err(corrupt(format!(
                    "entry {id} points at `{}`, expected `{expected_file}`",
                    entry.file
                )));
            }
            listed.insert(entry.file.clone());
            let path = dir.join(&entry.file);
            if !path.is_file() {
                return Err(Error::MissingSampleFile { path });
            }
            let data = read_matrix(&path, &db.schema)?;
            if data.nrows() != entry.row_count {
                return Err(Error::RowCountMismatch {
                    path,
                    expected: entry.row_count,
                    found: data.nrows(),
                });
            }
            let sample = MtsSample::new(id, db.schema.clone(), data, entry.start_epoch)?;
            db.add(sample)?;
        }

        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".csv") && !listed.contains(&name) {
                return Err(corrupt(format!("sample file `{name}` is not listed")));
            }
        }
        Ok(db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbStats {
    pub variable_count: usize,
    pub mean_length: f64,
    /// `mean_length` rounded to the nearest integer for display.
    pub average_length: usize,
    pub label_count: usize,
    pub samples_per_label: BTreeMap<String, usize>,
    pub total: usize,
}

impl DbStats {
    /// The per-label count when every label has the same number of samples.
    pub fn uniform_samples_per_label(&self) -> Option<usize> {
        let mut counts = self.samples_per_label.values();
        let first = *counts.next()?;
        counts.all(|&c| c == first).then_some(first)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub dialect: Dialect,
    pub schema: Vec<String>,
    pub samples: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub label: String,
    pub collection_id: u64,
    pub row_count: usize,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_epoch: Option<i64>,
}

/// Formats a value with 17 significant digits.
pub fn format_full(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_matrix(path: &Path, schema: &MetricSchema, data: &DMatrix<f64>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(schema.names()).map_err(csv_err)?;
    for row in data.row_iter() {
        w.write_record(row.iter().map(|&v| format_full(v)))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

fn read_matrix(path: &Path, schema: &MetricSchema) -> Result<DMatrix<f64>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(schema.names().iter().map(String::as_str)) {
        let found: Vec<&str> = header.iter().collect();
        let column = schema
            .names()
            .iter()
            .zip(found.iter().copied().chain(std::iter::repeat("")))
            .find(|(a, b)| a.as_str() != *b)
            .map_or_else(|| found[schema.len()].to_owned(), |(a, _)| a.clone());
        return Err(Error::SchemaMismatch {
            column,
            expected: schema.len(),
            found: found.len(),
        });
    }
    let n = schema.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| Error::MalformedRecord {
                file: path.display().to_string(),
                line,
                reason: format!("bad number `{cell}`"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    debug_assert_eq!(values.len(), rows * n);
    Ok(DMatrix::from_row_slice(rows, n, &values))
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
