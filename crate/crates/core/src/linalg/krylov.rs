use super::operator::LinearOperator;
use super::scalar::{axpy, dot, norm, Scalar};

/// Outcome of a Krylov solve. Non-convergence is not an error: the best
/// iterate is returned with `converged == false` and the caller decides.
#[derive(Debug, Clone)]
pub struct KrylovResult<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Relative residual at exit (definition depends on the method).
    pub relative_residual: f64,
    pub converged: bool,
    /// Set by `pcg` when a direction with `<p, Hp> <= 0` was met.
    pub negative_curvature: bool,
}

/// CGLS for `min ‖A x − b‖₂`.
///
/// Stops when `‖Aᴴ(b − A x)‖ ≤ tol ‖Aᴴ b‖`.
pub fn cgls<T: Scalar>(op: &dyn LinearOperator<T>, rhs: &[T], tol: f64, maxit: usize) -> KrylovResult<T> {
    assert_eq!(rhs.len(), op.nrows(), "cgls: rhs dimension mismatch");
    let n = op.ncols();
    let mut x = vec![T::zero(); n];
    let mut r = rhs.to_vec();
    let mut s = op.apply_adjoint(&r);
    let s0 = norm(&s);
    if s0 == 0.0 {
        return KrylovResult { x, iterations: 0, relative_residual: 0.0, converged: true, negative_curvature: false };
    }
    let mut p = s.clone();
    let mut gamma = dot(&s, &s).re();
    let mut rel = 1.0;
    for it in 1..=maxit {
        let q = op.apply(&p);
        let qq = dot(&q, &q).re();
        if qq == 0.0 {
            return KrylovResult { x, iterations: it - 1, relative_residual: rel, converged: false, negative_curvature: false };
        }
        let alpha = T::from_real(gamma / qq);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        s = op.apply_adjoint(&r);
        let gamma_new = dot(&s, &s).re();
        rel = gamma_new.sqrt() / s0;
        if rel <= tol {
            return KrylovResult { x, iterations: it, relative_residual: rel, converged: true, negative_curvature: false };
        }
        let beta = T::from_real(gamma_new / gamma);
        gamma = gamma_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = *si + beta * *pi;
        }
    }
    KrylovResult { x, iterations: maxit, relative_residual: rel, converged: false, negative_curvature: false }
}

/// Conjugate gradients for `H x = g` with `H` self-adjoint positive
/// (semi)definite. Stops at `‖H x − g‖ ≤ delta ‖g‖`.
///
/// On negative or zero curvature the current iterate is returned flagged;
/// at the first iteration that iterate is the steepest-descent fallback `g`.
pub fn pcg<T: Scalar>(hvp: &dyn LinearOperator<T>, g: &[T], delta: f64, maxit: usize) -> KrylovResult<T> {
    let n = g.len();
    assert_eq!(hvp.ncols(), n, "pcg: dimension mismatch");
    let g0 = norm(g);
    let mut x = vec![T::zero(); n];
    if g0 == 0.0 {
        return KrylovResult { x, iterations: 0, relative_residual: 0.0, converged: true, negative_curvature: false };
    }
    let mut r = g.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re();
    let mut rel = 1.0;
    for it in 1..=maxit {
        let hp = hvp.apply(&p);
        let curv = dot(&p, &hp).re();
        if curv <= 0.0 || !curv.is_finite() {
            if it == 1 {
                x = g.to_vec();
            }
            return KrylovResult { x, iterations: it, relative_residual: rel, converged: false, negative_curvature: true };
        }
        let alpha = T::from_real(rr / curv);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &hp, &mut r);
        let rr_new = dot(&r, &r).re();
        rel = rr_new.sqrt() / g0;
        if rel <= delta {
            return KrylovResult { x, iterations: it, relative_residual: rel, converged: true, negative_curvature: false };
        }
        let beta = T::from_real(rr_new / rr);
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = *ri + beta * *pi;
        }
    }
    KrylovResult { x, iterations: maxit, relative_residual: rel, converged: false, negative_curvature: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator::{symmetric_operator, Stacked};
    use crate::linalg::sparse::SparseMatrix;
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cgls_identity_one_iteration() {
        let id = SparseMatrix::<Complex64>::identity(5);
        let b: Vec<_> = (0..5).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let res = cgls(&id, &b, 1e-12, 10);
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        for (x, y) in res.x.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn cgls_zero_rhs() {
        let id = SparseMatrix::<f64>::identity(3);
        let res = cgls(&id, &[0.0; 3], 1e-10, 10);
        assert_eq!(res.x, vec![0.0; 3]);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn cgls_overdetermined_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trips: Vec<_> = (0..12)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, rng.random_range(-1.0..1.0)))
            .collect();
        let a = SparseMatrix::from_triplets(12, 5, trips).unwrap();
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let d = a.to_dense();
        let oracle = (d.transpose() * &d).lu().solve(&(d.transpose() * DVector::from_vec(b.clone()))).unwrap();
        let res = cgls(&a, &b, 1e-13, 100);
        assert!(res.converged);
        let err: f64 = res.x.iter().zip(oracle.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(err / oracle.norm() < 1e-9);
    }

    #[test]
    fn cgls_reports_non_convergence() {
        let a = SparseMatrix::from_diagonal(&[1.0, 10.0, 100.0, 1000.0]);
        let res = cgls(&a, &[1.0; 4], 1e-14, 1);
        assert!(!res.converged);
        assert!(res.relative_residual > 0.0);
    }

    #[test]
    fn stacked_adjoint_consistent() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, Complex64::new(1.0, 2.0)), (1, 0, Complex64::new(0.0, 1.0))]).unwrap();
        let p = SparseMatrix::from_triplets(1, 2, vec![(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
        let s = Stacked { top: &a, bottom: &p, weight: Complex64::new(0.5, 0.0) };
        let x = vec![Complex64::new(1.0, -1.0), Complex64::new(2.0, 0.3)];
        let y = vec![Complex64::new(0.1, 0.2), Complex64::new(-1.0, 0.0), Complex64::new(3.0, 1.0)];
        let lhs = dot(&s.apply(&x), &y);
        let rhs = dot(&x, &s.apply_adjoint(&y));
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn pcg_identity_and_zero() {
        let id = SparseMatrix::<f64>::identity(4);
        let g = vec![1.0, -2.0, 3.0, 0.5];
        let res = pcg(&id, &g, 1e-12, 10);
        assert!(res.converged);
        assert_eq!(res.x, g);
        let res = pcg(&id, &[0.0; 4], 1e-12, 10);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.x, vec![0.0; 4]);
    }

    #[test]
    fn pcg_matches_dense_cholesky_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let h = &b * b.transpose() + DMatrix::identity(10, 10) * 0.5;
        let g: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).cos()).collect();
        let oracle = h.clone().cholesky().unwrap().solve(&DVector::from_vec(g.clone()));
        let hh = h.clone();
        let op = symmetric_operator(10, move |x: &[f64]| (&hh * DVector::from_row_slice(x)).as_slice().to_vec());
        let res = pcg(&op, &g, 1e-10, 100);
        assert!(res.converged);
        let err: f64 = res.x.iter().zip(oracle.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(err / oracle.norm() < 1e-8);
    }

    #[test]
    fn pcg_flags_negative_curvature() {
        let h = SparseMatrix::from_diagonal(&[1.0, -1.0]);
        let res = pcg(&h, &[1.0, 1.0], 1e-10, 10);
        assert!(res.negative_curvature);
        assert!(!res.converged);
    }
}
