use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Convergence threshold on the off-diagonal Frobenius norm, relative to the
/// Frobenius norm of the input.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
/// Symmetry and PSD checks are relative to `max(1, scale of the input)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Eigenvectors (as orthonormal columns) and eigenvalues, sorted by
/// descending eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl EigenDecomposition {
    /// Wraps an existing basis. Columns must be orthonormal to 1e-8 and
    /// `values` non-negative and descending.
    pub fn new(vectors: DMatrix<f64>, values: DVector<f64>) -> Result<Self> {
        let n = values.len();
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: vectors.ncols(),
            });
        }
        let gram = vectors.tr_mul(&vectors);
        let err = (gram - DMatrix::identity(n, n)).amax();
        if err > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "eigenvector columns are not orthonormal (error {err:e})"
            )));
        }
        if values.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be non-negative".into(),
            ));
        }
        if values.as_slice().windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be descending".into(),
            ));
        }
        Ok(Self { vectors, values })
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        scaled * self.vectors.transpose()
    }
}

/// Eigendecomposition of a symmetric positive semi-definite matrix by the
/// cyclic Jacobi method.
///
/// Sweeps continue until the off-diagonal norm drops below
/// [`OFF_DIAGONAL_TOLERANCE`] times the input norm. Eigenvalues that come out
/// slightly negative from round-off are clamped to zero; tied eigenvalues keep
/// the order the solver produced them in.
pub fn eigen(matrix: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.ncols(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let scale = matrix.amax().max(1.0);
    let mut asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }

    let mut a = matrix.clone();
    // Work on the exactly symmetric average.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let threshold = OFF_DIAGONAL_TOLERANCE * a.norm();

    let mut converged = false;
    let mut off = off_diagonal_norm(&a);
    for _ in 0..MAX_SWEEPS {
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&a);
    }
    if !converged && off > threshold {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));

    let negative_floor = -NEGATIVE_EIGENVALUE_TOLERANCE * matrix.norm().max(1.0);
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let lambda = a[(src, src)];
        if lambda < negative_floor {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: lambda });
        }
        values[dst] = lambda.max(0.0);
        vectors.set_column(dst, &v.column(src));
    }
    Ok(EigenDecomposition { vectors, values })
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Applies the Jacobi rotation that zeroes `a[(p, q)]`, accumulating it into `v`.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let n = a.nrows();

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp;
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq;
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_orthonormal(v: &DMatrix<f64>) {
        let n = v.ncols();
        let err = (v.tr_mul(v) - DMatrix::identity(n, n)).amax();
        assert!(err <= 1e-8, "orthonormality error {err}");
    }

    #[test]
    fn identity_is_isotropic() {
        let e = eigen(&DMatrix::identity(4, 4)).unwrap();
        assert!(e.values().iter().all(|&v| v == 1.0));
        assert_orthonormal(e.vectors());
    }

    #[test]
    fn diagonal_matrix_gives_coordinate_axes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let e = eigen(&m).unwrap();
        assert_eq!(e.values().as_slice(), &[4.0, 1.0]);
        assert_eq!(e.vectors()[(1, 0)].abs(), 1.0);
        assert_eq!(e.vectors()[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn rank_one_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 4.0, 4.0, 4.0]);
        let e = eigen(&m).unwrap();
        assert!((e.values()[0] - 8.0).abs() < 1e-12);
        assert!(e.values()[1].abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let first = e.vectors().column(0);
        assert!((first[0].abs() - h).abs() < 1e-12);
        assert!((first[1].abs() - h).abs() < 1e-12);
        assert_eq!(first[0].signum(), first[1].signum());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(eigen(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn indefinite_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            eigen(&m),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn zero_matrix_is_fine() {
        let e = eigen(&DMatrix::zeros(3, 3)).unwrap();
        assert!(e.values().iter().all(|&v| v == 0.0));
        assert_orthonormal(e.vectors());
    }

    #[test]
    fn large_magnitudes_converge() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[4e18, 1e18, 2e17, 1e18, 3e18, 5e17, 2e17, 5e17, 1e18],
        );
        let e = eigen(&m).unwrap();
        assert!((e.reconstruct() - &m).norm() <= 1e-12 * m.norm());
        assert_orthonormal(e.vectors());
    }

    #[test]
    fn constructor_validates() {
        let v = DMatrix::identity(2, 2);
        assert!(EigenDecomposition::new(v.clone(), DVector::from_vec(vec![1.0, 2.0])).is_err());
        assert!(
            EigenDecomposition::new(v.clone() * 2.0, DVector::from_vec(vec![2.0, 1.0])).is_err()
        );
        assert!(EigenDecomposition::new(v, DVector::from_vec(vec![2.0, 1.0])).is_ok());
    }
}
