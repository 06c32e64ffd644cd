use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sample::MtsSample;

/// Divisor used when turning the scatter matrix into a covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CovarianceScaling {
    /// `1 / (m - 1)`.
    #[default]
    Sample,
    /// `1 / m`.
    Population,
}

/// Column-mean-centered covariance of a sample, `1/(m-1)` normalized.
pub fn covariance(sample: &MtsSample) -> Result<DMatrix<f64>> {
    covariance_of(sample.data(), CovarianceScaling::Sample)
}

/// Covariance of an `m x n` data matrix (rows are observations).
///
/// Rows are summed in lexicographic order, so the result is bit-identical
/// under any permutation of the input rows.
pub fn covariance_of(data: &DMatrix<f64>, scaling: CovarianceScaling) -> Result<DMatrix<f64>> {
    let (m, n) = data.shape();
    if m < 2 {
        return Err(Error::TooFewRows {
            context: "covariance".into(),
            rows: m,
        });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        data.row(a)
            .iter()
            .zip(data.row(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });

    let mut mean = vec![0.0; n];
    for &i in &order {
        for (j, acc) in mean.iter_mut().enumerate() {
            *acc += data[(i, j)];
        }
    }
    for v in &mut mean {
        *v /= m as f64;
    }

    let mut centered = DMatrix::zeros(m, n);
    for (dst, &src) in order.iter().enumerate() {
        for j in 0..n {
            centered[(dst, j)] = data[(src, j)] - mean[j];
        }
    }

    let divisor = match scaling {
        CovarianceScaling::Sample => (m - 1) as f64,
        CovarianceScaling::Population => m as f64,
    };
    let mut cov = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let dot = centered.column(a).dot(&centered.column(b)) / divisor;
            cov[(a, b)] = dot;
            cov[(b, a)] = dot;
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_two_column_case() {
        let data = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let cov = covariance_of(&data, CovarianceScaling::Sample).unwrap();
        assert_eq!(cov, DMatrix::from_row_slice(2, 2, &[4.0, 4.0, 4.0, 4.0]));
    }

    #[test]
    fn constant_column_has_zero_covariance() {
        let data = DMatrix::from_row_slice(4, 2, &[1.0, 7.0, 2.0, 7.0, 4.0, 7.0, 8.0, 7.0]);
        let cov = covariance_of(&data, CovarianceScaling::Sample).unwrap();
        assert_eq!(cov[(1, 1)], 0.0);
        assert_eq!(cov[(0, 1)], 0.0);
        assert_eq!(cov[(1, 0)], 0.0);
        assert!(cov[(0, 0)] > 0.0);
    }

    #[test]
    fn mean_shift_leaves_covariance_unchanged() {
        let data = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 5.0, 0.5, 4.0]);
        let mut shifted = data.clone();
        shifted.column_mut(0).add_scalar_mut(100.0);
        let a = covariance_of(&data, CovarianceScaling::Sample).unwrap();
        let b = covariance_of(&shifted, CovarianceScaling::Sample).unwrap();
        assert!((&a - &b).norm() <= 1e-10 * 1.0f64.max(b.norm()));
    }

    #[test]
    fn row_order_does_not_matter() {
        let data = DMatrix::from_row_slice(4, 2, &[0.1, 2.0, 3.3, 1.0, 2.0, 5.7, 0.5, 4.0]);
        let permuted = DMatrix::from_fn(4, 2, |i, j| data[([2, 0, 3, 1][i], j)]);
        assert_eq!(
            covariance_of(&data, CovarianceScaling::Sample).unwrap(),
            covariance_of(&permuted, CovarianceScaling::Sample).unwrap()
        );
    }

    #[test]
    fn single_row_is_rejected() {
        let data = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(
            covariance_of(&data, CovarianceScaling::Sample),
            Err(Error::TooFewRows { rows: 1, .. })
        ));
    }
}
