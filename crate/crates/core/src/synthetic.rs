//! Seeded synthetic workload signatures.
//!
//! Every label gets its own orthonormal basis whose first column (the
//! dominant direction) is a distinct column of one shared random orthogonal
//! matrix, so dominant eigenvectors are mutually orthogonal across labels.
//! Collections draw Gaussian rows with a geometrically decaying spectrum in
//! that basis, plus a per-label mean offset and isotropic noise.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::db::SignatureDatabase;
use crate::error::{Error, Result};
use crate::sample::{Dialect, MetricSchema, MtsSample, SampleId};

/// Workload names used when no explicit labels are given.
pub const DEFAULT_LABELS: [&str; 9] = [
    "BT_B", "BT_C", "CG_C", "FT_C", "LU_B", "LU_C", "MLC", "SP_B", "SP_C",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub labels: Vec<String>,
    pub collections: usize,
    pub metrics: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    /// Ratio between consecutive eigenvalues of the generating spectrum.
    pub decay: f64,
    /// Standard deviation of isotropic noise added to every entry.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            labels: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
            collections: 9,
            metrics: 29,
            min_rows: 100,
            max_rows: 156,
            decay: 0.6,
            noise: 0.01,
            seed: 42,
        }
    }
}

pub struct SyntheticGenerator {
    spec: SyntheticSpec,
    schema: MetricSchema,
    bases: Vec<DMatrix<f64>>,
    means: Vec<DVector<f64>>,
    rng: ChaCha8Rng,
}

impl SyntheticGenerator {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        let n = spec.metrics;
        if spec.labels.is_empty() || spec.labels.len() > n {
            return Err(Error::InvalidArgument(format!(
                "need between 1 and {n} labels, got {}",
                spec.labels.len()
            )));
        }
        if spec.min_rows < 2 || spec.max_rows < spec.min_rows {
            return Err(Error::InvalidArgument(
                "row range must satisfy 2 <= min <= max".into(),
            ));
        }
        let schema = MetricSchema::new(
            (0..n).map(|i| format!("metric_{i:02}")).collect(),
            Dialect::Sar,
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let shared = random_orthogonal(&mut rng, n, None);
        let mut bases = Vec::with_capacity(spec.labels.len());
        let mut means = Vec::with_capacity(spec.labels.len());
        for x in 0..spec.labels.len() {
            let dominant = shared.column(x).into_owned();
            bases.push(random_orthogonal(&mut rng, n, Some(dominant)));
            means.push(DVector::from_fn(n, |_, _| rng.random_range(0.0..100.0)));
        }
        Ok(Self {
            spec,
            schema,
            bases,
            means,
            rng,
        })
    }

    pub fn schema(&self) -> &MetricSchema {
        &self.schema
    }

    pub fn labels(&self) -> &[String] {
        &self.spec.labels
    }

    /// The generating basis of a label; column 0 is its dominant direction.
    pub fn basis(&self, label_index: usize) -> &DMatrix<f64> {
        &self.bases[label_index]
    }

    /// Draws one collection of `label_index`.
    pub fn sample(&mut self, label_index: usize, collection_id: u64) -> Result<MtsSample> {
        let n = self.spec.metrics;
        let m = self
            .rng
            .random_range(self.spec.min_rows..=self.spec.max_rows);
        let basis = &self.bases[label_index];
        let mean = &self.means[label_index];
        let scales: Vec<f64> = (0..n)
            .map(|i| self.spec.decay.powi(i as i32).sqrt())
            .collect();
        let mut data = DMatrix::zeros(m, n);
        for t in 0..m {
            let z = DVector::from_fn(n, |i, _| {
                scales[i] * self.rng.sample::<f64, _>(StandardNormal)
            });
            let row = basis * z + mean;
            for j in 0..n {
                let noise: f64 = self.rng.sample(StandardNormal);
                data[(t, j)] = row[j] + self.spec.noise * noise;
            }
        }
        let id = SampleId::new(self.spec.labels[label_index].clone(), collection_id);
        MtsSample::new(id, self.schema.clone(), data, None)
    }

    /// `labels x collections` samples, label-major, collection ids from 0.
    pub fn database(&mut self) -> Result<SignatureDatabase> {
        let mut db = SignatureDatabase::new(self.schema.clone());
        for x in 0..self.spec.labels.len() {
            for c in 0..self.spec.collections {
                let s = self.sample(x, c as u64)?;
                db.add(s)?;
            }
        }
        Ok(db)
    }
}

/// Random orthogonal matrix by Gram-Schmidt on Gaussian columns, optionally
/// with a fixed unit first column.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize, first: Option<DVector<f64>>) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    if let Some(f) = first {
        cols.push(f.normalize());
    }
    while cols.len() < n {
        let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}
