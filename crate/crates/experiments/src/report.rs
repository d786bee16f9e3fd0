//! Error-bound diagnostics at a final iterate.

use std::fmt::Write as _;

use penopt::linalg::{dense_symmetric_eigenvalues, to_dense};
use penopt::objectives::{reduced_objective, EvalLevel, Problem, Regularizer};

use crate::error::Result;
use crate::records::fmt_f64;

/// Largest model dimension for which `H` is assembled densely.
pub const REPORT_DENSE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `κ(H)` with `H = Re(JᴴJ) + αDᵀD` the reduced Gauss-Newton Hessian.
    pub kappa: f64,
    pub norm_h: f64,
    /// `‖J‖ = √λ_max(Re(JᴴJ))`.
    pub norm_j: f64,
    pub epsilon: f64,
    pub eps_tilde: f64,
    /// `‖d − P A(m)⁻¹ q‖`.
    pub eta: f64,
    pub eta_tilde: f64,
    pub lambda_scaled: f64,
    /// `κ(H)(ε̃ + η̃/λ̃)`.
    pub bound: f64,
}

impl BoundReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("kappa_H", self.kappa),
            ("norm_H", self.norm_h),
            ("norm_J", self.norm_j),
            ("epsilon", self.epsilon),
            ("eps_tilde", self.eps_tilde),
            ("eta", self.eta),
            ("eta_tilde", self.eta_tilde),
            ("lambda_scaled", self.lambda_scaled),
            ("bound", self.bound),
        ] {
            let _ = writeln!(s, "{k} {}", fmt_f64(v));
        }
        s
    }
}

/// Dense `H` (with and without regularization) at `m`.
pub fn dense_gauss_newton(problem: &Problem, m: &[f64]) -> Result<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>)> {
    let mut plain = problem.clone();
    plain.reg = Regularizer::none(problem.model_dim());
    let ev = reduced_objective(&plain, m, EvalLevel::Gradient)?;
    let mut jj = to_dense(ev.gn_hvp());
    jj = (&jj + jj.transpose()) * 0.5;
    let d = problem.reg.d.to_dense();
    let h = &jj + d.transpose() * d * problem.reg.alpha;
    Ok((h, jj))
}

pub fn error_bound_report(problem: &Problem, m: &[f64], epsilon: f64, lambda_scaled: f64) -> Result<BoundReport> {
    let (h, jj) = dense_gauss_newton(problem, m)?;
    let eh = dense_symmetric_eigenvalues(&h, REPORT_DENSE_CAP)?;
    let ej = dense_symmetric_eigenvalues(&jj, REPORT_DENSE_CAP)?;
    let norm_h = eh[0];
    let min_h = *eh.last().expect("nonempty model");
    let kappa = if min_h > 0.0 { norm_h / min_h } else { f64::INFINITY };
    let norm_j = ej[0].max(0.0).sqrt();
    let eta = reduced_objective(problem, m, EvalLevel::Value)?.diagnostics.data_misfit;
    let eps_tilde = epsilon / norm_h;
    let eta_tilde = if norm_j > 0.0 { eta / norm_j } else { 0.0 };
    Ok(BoundReport { kappa, norm_h, norm_j, epsilon, eps_tilde, eta, eta_tilde, lambda_scaled, bound: kappa * (eps_tilde + eta_tilde / lambda_scaled) })
}
