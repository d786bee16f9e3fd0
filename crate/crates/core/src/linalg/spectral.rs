use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::LinearOperator;
use super::scalar::{dot, norm, Scalar};
use super::LinalgError;

/// Largest dimension accepted by the dense spectral routines.
pub const DEFAULT_DENSE_CAP: usize = 512;

/// Deterministic, well-spread start vector.
pub fn start_vector<T: Scalar>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            T::from_real(1.0 + 0.5 * (1.7 * t + 0.3).sin() + 0.25 * (0.31 * t * t).cos())
        })
        .collect()
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator by power
/// iteration.
///
/// Stops when the eigen-residual `‖Bx − μx‖ ≤ tol·μ`, which bounds the distance
/// of `μ` to the spectrum by the same amount.
pub fn power_iteration_largest<T: Scalar>(
    op: &dyn LinearOperator<T>,
    tol: f64,
    maxit: usize,
) -> Result<f64, LinalgError> {
    let n = op.ncols();
    if op.nrows() != n {
        return Err(LinalgError::NotSquare { rows: op.nrows(), cols: n });
    }
    let mut x: Vec<T> = start_vector(n);
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v *= T::from_real(1.0 / nx));
    let mut mu = 0.0;
    for _ in 0..maxit {
        let y = op.apply(&x);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        mu = dot(&x, &y).re();
        let resid: f64 = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (*yi - T::from_real(mu) * *xi).abs_sq())
            .sum::<f64>()
            .sqrt();
        if resid <= tol * mu.abs() {
            return Ok(mu);
        }
        let inv = T::from_real(1.0 / ny);
        x = y.into_iter().map(|v| v * inv).collect();
    }
    Err(LinalgError::Stagnation { iterations: maxit, estimate: mu })
}

/// All eigenvalues of a dense Hermitian matrix, in descending order.
pub fn dense_hermitian_eigenvalues(m: &DMatrix<Complex64>, cap: usize) -> Result<Vec<f64>, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::NotSquare { rows: n, cols: m.ncols() });
    }
    if n > cap {
        return Err(LinalgError::DimensionCap { dim: n, cap });
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                return Err(LinalgError::NotHermitian);
            }
        }
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(ev)
}

/// Real symmetric convenience wrapper.
pub fn dense_symmetric_eigenvalues(m: &DMatrix<f64>, cap: usize) -> Result<Vec<f64>, LinalgError> {
    dense_hermitian_eigenvalues(&m.map(|v| Complex64::new(v, 0.0)), cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::SparseMatrix;

    #[test]
    fn power_iteration_diagonal() {
        let d = SparseMatrix::from_diagonal(&[1.0, 2.0, 5.0]);
        let mu = power_iteration_largest(&d, 1e-10, 10_000).unwrap();
        assert!((mu - 5.0).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_zero_operator() {
        let z = SparseMatrix::<f64>::zeros(4, 4);
        assert_eq!(power_iteration_largest(&z, 1e-8, 100).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_stagnation_reported() {
        let d = SparseMatrix::from_diagonal(&[1.0, 0.999999, 0.5]);
        let r = power_iteration_largest(&d, 1e-14, 3);
        assert!(matches!(r, Err(LinalgError::Stagnation { iterations: 3, .. })));
    }

    #[test]
    fn eigenvalues_sorted_descending() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(dense_symmetric_eigenvalues(&m, 8).unwrap(), vec![3.0, 2.0, 1.0]);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(dense_symmetric_eigenvalues(&id, 8).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigenvalue_sum_reproduces_trace() {
        let m = DMatrix::from_fn(6, 6, |i, j| {
            let a = Complex64::new((i + j) as f64, i as f64 - j as f64);
            if i == j {
                Complex64::new(10.0 + i as f64, 0.0)
            } else {
                a / 7.0
            }
        });
        let ev = dense_hermitian_eigenvalues(&m, 8).unwrap();
        let trace: f64 = (0..6).map(|i| m[(i, i)].re).sum();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10 * trace);
    }

    #[test]
    fn cap_and_hermitian_checks() {
        let m = DMatrix::<Complex64>::identity(5, 5);
        assert!(matches!(dense_hermitian_eigenvalues(&m, 4), Err(LinalgError::DimensionCap { .. })));
        let mut bad = DMatrix::<Complex64>::identity(2, 2);
        bad[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(dense_hermitian_eigenvalues(&bad, 4), Err(LinalgError::NotHermitian)));
    }
}
