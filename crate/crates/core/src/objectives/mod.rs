//! Reduced, penalty and equation-error objectives over a set of
//! experiments, with real gradients, matrix-free Gauss-Newton Hessians and
//! Lagrangian diagnostics.
//!
//! Gradients with respect to the real model are real parts of the complex
//! adjoint products, e.g. `∇φ = Σ_k Re(G_kᴴ v_k)`. Per-experiment work is
//! mapped in parallel and reduced in experiment order.

mod equation_error;
mod hessian;
mod lagrangian;
mod penalty;
mod reduced;

pub use equation_error::{equation_error_objective, EquationErrorObjective};
pub use hessian::{GnHessian, PenaltyFullHessian};
pub use lagrangian::{lagrangian_gradient, LagrangianGradient};
pub use penalty::{penalty_full_hessian_hvp, penalty_objective, sparse_gn_hessian_penalty, PenaltyObjective};
pub use reduced::{reduced_objective, ReducedObjective};

use std::sync::Arc;

use num_complex::Complex64;

use crate::linalg::{SparseComplexMatrix, SparseRealMatrix};
use crate::models::ForwardModel;
use crate::{check_len, Error, Result};

/// One source with its receivers and observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub q: Vec<Complex64>,
    pub p: Arc<SparseComplexMatrix>,
    pub d: Vec<Complex64>,
}

/// `K` independent experiments sharing one forward model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSet {
    pub experiments: Vec<Experiment>,
}

impl ExperimentSet {
    pub fn new(experiments: Vec<Experiment>) -> Self {
        Self { experiments }
    }

    pub fn len(&self) -> usize {
        self.experiments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Experiment> {
        self.experiments.iter()
    }

    pub fn validate(&self, state_dim: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("experiment set is empty".into()));
        }
        for e in &self.experiments {
            check_len("source", e.q.len(), state_dim)?;
            check_len("sampling columns", e.p.ncols(), state_dim)?;
            check_len("data", e.d.len(), e.p.nrows())?;
        }
        Ok(())
    }

    /// For each experiment, the index of the first experiment with the same
    /// sampling operator, so augmented factorizations can be shared.
    pub fn sampling_groups(&self) -> Vec<usize> {
        let ex = &self.experiments;
        (0..ex.len())
            .map(|k| (0..k).find(|&j| Arc::ptr_eq(&ex[j].p, &ex[k].p) || ex[j].p == ex[k].p).unwrap_or(k))
            .collect()
    }
}

/// Tikhonov term `α/2 ‖D m‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    pub alpha: f64,
    pub d: SparseRealMatrix,
}

impl Regularizer {
    pub fn new(alpha: f64, d: SparseRealMatrix) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("regularization weight must be nonnegative, got {alpha}")));
        }
        Ok(Self { alpha, d })
    }

    pub fn none(model_dim: usize) -> Self {
        Self { alpha: 0.0, d: SparseRealMatrix::zeros(0, model_dim) }
    }

    pub fn for_model(model: &dyn ForwardModel, alpha: f64) -> Result<Self> {
        Self::new(alpha, model.regularization_operator())
    }

    pub fn value(&self, m: &[f64]) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        0.5 * self.alpha * self.d.mul_vec(m).iter().map(|x| x * x).sum::<f64>()
    }

    pub fn gradient(&self, m: &[f64]) -> Vec<f64> {
        self.hvp(m)
    }

    /// `α DᵀD x`.
    pub fn hvp(&self, x: &[f64]) -> Vec<f64> {
        if self.alpha == 0.0 {
            return vec![0.0; x.len()];
        }
        self.d.adjoint_mul_vec(&self.d.mul_vec(x)).into_iter().map(|v| self.alpha * v).collect()
    }
}

/// Everything the optimizers and experiments need from one problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Arc<dyn ForwardModel>,
    pub experiments: ExperimentSet,
    pub reg: Regularizer,
}

impl Problem {
    pub fn new(model: Arc<dyn ForwardModel>, experiments: ExperimentSet, reg: Regularizer) -> Result<Self> {
        experiments.validate(model.state_dim())?;
        check_len("regularizer columns", reg.d.ncols(), model.model_dim())?;
        Ok(Self { model, experiments, reg })
    }

    pub fn model_dim(&self) -> usize {
        self.model.model_dim()
    }
}

/// Norms reported with every evaluation. Each is the 2-norm over all
/// experiments stacked.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Regularized `‖L_m‖` (the gradient norm); NaN for value-only calls.
    pub norm_lm: f64,
    pub norm_lu: f64,
    pub norm_lv: f64,
    /// `‖P u − d‖`.
    pub data_misfit: f64,
    /// `‖A u − q‖`.
    pub pde_misfit: f64,
}

impl Diagnostics {
    /// `‖∇ℒ‖` over `(m, u, v)`.
    pub fn norm_lagrangian(&self) -> f64 {
        (self.norm_lm.powi(2) + self.norm_lu.powi(2) + self.norm_lv.powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalLevel {
    Value,
    Gradient,
}

#[derive(Debug)]
pub struct ObjectiveEval {
    pub value: f64,
    /// Empty for value-only evaluations.
    pub gradient: Vec<f64>,
    pub diagnostics: Diagnostics,
    /// PDE solves spent producing this evaluation.
    pub pde_solves: usize,
    /// States per experiment (`u_red` or `u_λ`).
    pub states: Vec<Vec<Complex64>>,
    /// Adjoints per experiment (`v_red` or `v_λ`); empty for value-only
    /// reduced evaluations.
    pub adjoints: Vec<Vec<Complex64>>,
    /// Gauss-Newton Hessian at this point, present with a gradient.
    pub gn_hessian: Option<GnHessian>,
}

impl ObjectiveEval {
    pub fn gn_hvp(&self) -> &GnHessian {
        self.gn_hessian.as_ref().expect("Gauss-Newton Hessian requires a gradient evaluation")
    }
}

/// Anything the outer optimizers can minimize.
pub trait Objective: Sync {
    fn model_dim(&self) -> usize;
    fn evaluate(&self, m: &[f64], level: EvalLevel) -> Result<ObjectiveEval>;
    /// Current penalty parameter, if any.
    fn lambda(&self) -> Option<f64> {
        None
    }
}

/// `Re(Gᴴ v)`.
pub(crate) fn re_adjoint(g: &SparseComplexMatrix, v: &[Complex64]) -> Vec<f64> {
    g.adjoint_mul_vec(v).into_iter().map(|z| z.re).collect()
}

pub(crate) fn complexify(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// In-order sum of per-experiment real vectors plus a final term.
pub(crate) fn ordered_total(parts: impl IntoIterator<Item = Vec<f64>>, extra: Vec<f64>) -> Vec<f64> {
    let mut out = vec![0.0; extra.len()];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    for (o, v) in out.iter_mut().zip(extra) {
        *o += v;
    }
    out
}

pub(crate) fn norm_sq(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regularizer_pieces() {
        let d = crate::models::difference_matrix(4, 1.0);
        let r = Regularizer::new(2.0, d).unwrap();
        let m = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(r.value(&m), 2.0 / 2.0 * (1.0 + 4.0 + 9.0));
        assert_eq!(r.gradient(&m), vec![-2.0, -2.0, -2.0, 6.0]);
        assert!(Regularizer::new(-1.0, SparseRealMatrix::zeros(0, 4)).is_err());
        assert_eq!(Regularizer::none(3).hvp(&[1.0, 2.0, 3.0]), vec![0.0; 3]);
    }

    #[test]
    fn sampling_groups_share_equal_operators() {
        let (problem, _) = testing::parabolic(11, 0.0, true);
        assert_eq!(problem.experiments.sampling_groups(), vec![0, 0]);
    }
}
