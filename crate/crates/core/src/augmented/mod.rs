//! State and adjoint solves for the reduced and penalty formulations, and the
//! eigenvalue-shift analysis of the augmented normal matrix.
//!
//! Every call that performs a linear solve with `A`, `Aᴴ` or the augmented
//! normal matrix reports exactly one counted PDE solve per right-hand side.

mod spectral;

pub use spectral::{penalty_scale_dense, spectral_shift_report, SpectralReport, SPECTRAL_CSV_HEADER};

use num_complex::Complex64;

use crate::linalg::scalar::{norm, sub};
use crate::linalg::{cgls, factor_general, factor_hermitian, BandedLu, HermitianFactor, KrylovResult, SparseComplexMatrix, Stacked};
use crate::{check_len, Error, Result};

/// Refinement sweeps for the penalty normal equations.
const PENALTY_REFINEMENT_STEPS: usize = 2;

/// A state (or adjoint) together with its residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSolve {
    pub u: Vec<Complex64>,
    /// `‖A u − q‖₂`.
    pub residual_pde: f64,
    /// `‖P u − d‖₂`, when data are involved.
    pub residual_data: Option<f64>,
    pub solve_count_delta: usize,
}

/// Factored `A(m)`, reused for every experiment at the same model.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    a: SparseComplexMatrix,
    lu: BandedLu<Complex64>,
}

impl ReducedSystem {
    pub fn factor(a: SparseComplexMatrix) -> Result<Self> {
        let lu = factor_general(&a)?;
        Ok(Self { a, lu })
    }

    pub fn matrix(&self) -> &SparseComplexMatrix {
        &self.a
    }

    /// `A⁻¹ b` without bookkeeping.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve(b)
    }

    /// `A⁻ᴴ b` without bookkeeping.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve_adjoint(b)
    }

    /// `u = A⁻¹ q`.
    pub fn state(&self, q: &[Complex64]) -> Result<StateSolve> {
        check_len("source", q.len(), self.a.nrows())?;
        let u = self.solve(q);
        let residual_pde = norm(&sub(&self.a.mul_vec(&u), q));
        Ok(StateSolve { u, residual_pde, residual_data: None, solve_count_delta: 1 })
    }

    /// `v = A⁻ᴴ Pᴴ(d − P u)`.
    pub fn adjoint(&self, p: &SparseComplexMatrix, d: &[Complex64], u: &[Complex64]) -> Result<StateSolve> {
        check_len("data", d.len(), p.nrows())?;
        check_len("state", u.len(), self.a.nrows())?;
        let r = sub(d, &p.mul_vec(u));
        let v = self.solve_adjoint(&p.adjoint_mul_vec(&r));
        let residual_pde = norm(&sub(&self.a.adjoint_mul_vec(&v), &p.adjoint_mul_vec(&r)));
        Ok(StateSolve { u: v, residual_pde, residual_data: Some(norm(&r)), solve_count_delta: 1 })
    }
}

pub fn solve_state_reduced(a: &SparseComplexMatrix, q: &[Complex64]) -> Result<StateSolve> {
    ReducedSystem::factor(a.clone())?.state(q)
}

pub fn solve_adjoint_reduced(a: &SparseComplexMatrix, p: &SparseComplexMatrix, d: &[Complex64], u: &[Complex64]) -> Result<StateSolve> {
    ReducedSystem::factor(a.clone())?.adjoint(p, d, u)
}

/// Factored `S = AᴴA + λ⁻¹PᴴP` for one `(A, P, λ)`.
#[derive(Debug, Clone)]
pub struct PenaltySystem {
    a: SparseComplexMatrix,
    p: SparseComplexMatrix,
    lambda: f64,
    chol: HermitianFactor<Complex64>,
}

impl PenaltySystem {
    pub fn factor(a: SparseComplexMatrix, p: SparseComplexMatrix, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        check_len("sampling columns", p.ncols(), a.ncols())?;
        let s = a.gram().add_scaled(Complex64::new(1.0 / lambda, 0.0), &p.gram());
        let chol = factor_hermitian(&s)?;
        Ok(Self { a, p, lambda, chol })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> &SparseComplexMatrix {
        &self.a
    }

    pub fn sampling(&self) -> &SparseComplexMatrix {
        &self.p
    }

    /// `S⁻¹ b` without bookkeeping.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        self.chol.solve(b)
    }

    /// `Aᴴ(q − A x) + λ⁻¹Pᴴ(d − P x)`, evaluated without forming `S x`.
    fn normal_residual(&self, x: &[Complex64], q: &[Complex64], d: &[Complex64]) -> Vec<Complex64> {
        let mut r = self.a.adjoint_mul_vec(&sub(q, &self.a.mul_vec(x)));
        let rd = self.p.adjoint_mul_vec(&sub(d, &self.p.mul_vec(x)));
        let il = 1.0 / self.lambda;
        r.iter_mut().zip(rd).for_each(|(a, b)| *a += b * il);
        r
    }

    /// Minimizer of `‖A u − q‖² + λ⁻¹‖P u − d‖²`.
    pub fn state(&self, q: &[Complex64], d: &[Complex64]) -> Result<StateSolve> {
        check_len("source", q.len(), self.a.nrows())?;
        check_len("data", d.len(), self.p.nrows())?;
        let zero = vec![Complex64::new(0.0, 0.0); self.a.ncols()];
        let mut u = self.solve(&self.normal_residual(&zero, q, d));
        for _ in 0..PENALTY_REFINEMENT_STEPS {
            let du = self.solve(&self.normal_residual(&u, q, d));
            u.iter_mut().zip(du).for_each(|(a, b)| *a += b);
        }
        Ok(StateSolve {
            residual_pde: norm(&sub(&self.a.mul_vec(&u), q)),
            residual_data: Some(norm(&sub(&self.p.mul_vec(&u), d))),
            u,
            solve_count_delta: 1,
        })
    }

    /// Relative residual of the normal equations at `u`.
    pub fn normal_equation_residual(&self, u: &[Complex64], q: &[Complex64], d: &[Complex64]) -> f64 {
        let zero = vec![Complex64::new(0.0, 0.0); u.len()];
        norm(&self.normal_residual(u, q, d)) / norm(&self.normal_residual(&zero, q, d)).max(f64::MIN_POSITIVE)
    }

    /// `(I − A S⁻¹ Aᴴ) x`, the projector of the penalty Gauss-Newton Hessian.
    pub fn complement(&self, x: &[Complex64]) -> Vec<Complex64> {
        let y = self.a.mul_vec(&self.solve(&self.a.adjoint_mul_vec(x)));
        sub(x, &y)
    }
}

pub fn solve_state_penalty(
    a: &SparseComplexMatrix,
    p: &SparseComplexMatrix,
    q: &[Complex64],
    d: &[Complex64],
    lambda: f64,
) -> Result<StateSolve> {
    PenaltySystem::factor(a.clone(), p.clone(), lambda)?.state(q, d)
}

/// `v_λ = λ(A u_λ − q)`; no solve.
pub fn solve_adjoint_penalty(a: &SparseComplexMatrix, u_lambda: &[Complex64], q: &[Complex64], lambda: f64) -> Vec<Complex64> {
    sub(&a.mul_vec(u_lambda), q).into_iter().map(|r| r * lambda).collect()
}

/// Penalty state by CGLS on the stacked system `[A; λ^{-1/2}P] u ≈ [q; λ^{-1/2}d]`.
pub fn solve_state_penalty_cgls(
    a: &SparseComplexMatrix,
    p: &SparseComplexMatrix,
    q: &[Complex64],
    d: &[Complex64],
    lambda: f64,
    tol: f64,
    maxit: usize,
) -> Result<(StateSolve, KrylovResult<Complex64>)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidLambda(lambda));
    }
    check_len("source", q.len(), a.nrows())?;
    check_len("data", d.len(), p.nrows())?;
    let w = lambda.powf(-0.5);
    let op = Stacked { top: a, bottom: p, weight: Complex64::new(w, 0.0) };
    let rhs: Vec<Complex64> = q.iter().copied().chain(d.iter().map(|x| x * w)).collect();
    let res = cgls(&op, &rhs, tol, maxit);
    let u = res.x.clone();
    let solve = StateSolve {
        residual_pde: norm(&sub(&a.mul_vec(&u), q)),
        residual_data: Some(norm(&sub(&p.mul_vec(&u), d))),
        u,
        solve_count_delta: 1,
    };
    Ok((solve, res))
}
