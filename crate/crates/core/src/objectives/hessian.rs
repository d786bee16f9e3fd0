use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use super::{complexify, ordered_total, re_adjoint, Regularizer};
use crate::augmented::{PenaltySystem, ReducedSystem};
use crate::exec::map_indexed;
use crate::linalg::{LinearOperator, SparseComplexMatrix};

#[derive(Debug)]
pub(crate) enum GnKind {
    /// `Re(Gᴴ A⁻ᴴ PᴴP A⁻¹ G)`: two solves per experiment.
    Reduced { sys: Arc<ReducedSystem>, ps: Vec<Arc<SparseComplexMatrix>> },
    /// `λ Re(Gᴴ (I − A S⁻¹ Aᴴ) G)`: one augmented solve per experiment.
    Penalty { systems: Vec<Arc<PenaltySystem>>, lambda: f64 },
    /// `Re(Gᴴ G)`: no solves.
    EquationError,
}

/// Matrix-free Gauss-Newton Hessian summed over experiments, plus `α DᵀD`.
///
/// Every application adds its PDE solves to an internal counter.
#[derive(Debug)]
pub struct GnHessian {
    dim: usize,
    kind: GnKind,
    gs: Vec<SparseComplexMatrix>,
    reg: Regularizer,
    solves: AtomicUsize,
}

impl GnHessian {
    pub(crate) fn new(dim: usize, kind: GnKind, gs: Vec<SparseComplexMatrix>, reg: Regularizer) -> Self {
        Self { dim, kind, gs, reg, solves: AtomicUsize::new(0) }
    }

    /// Solves spent in applications so far.
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn solves_per_apply(&self) -> usize {
        let k = self.gs.len();
        match self.kind {
            GnKind::Reduced { .. } => 2 * k,
            GnKind::Penalty { .. } => k,
            GnKind::EquationError => 0,
        }
    }

    pub fn jacobians(&self) -> &[SparseComplexMatrix] {
        &self.gs
    }

    fn apply_one(&self, k: usize, x: &[Complex64]) -> Vec<f64> {
        let g = &self.gs[k];
        let gx = g.mul_vec(x);
        match &self.kind {
            GnKind::Reduced { sys, ps } => {
                let w = sys.solve(&gx);
                let z = sys.solve_adjoint(&ps[k].adjoint_mul_vec(&ps[k].mul_vec(&w)));
                re_adjoint(g, &z)
            }
            GnKind::Penalty { systems, lambda } => re_adjoint(g, &systems[k].complement(&gx)).into_iter().map(|v| v * lambda).collect(),
            GnKind::EquationError => re_adjoint(g, &gx),
        }
    }
}

impl LinearOperator<f64> for GnHessian {
    fn nrows(&self) -> usize {
        self.dim
    }

    fn ncols(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let xc = complexify(x);
        let parts = map_indexed(self.gs.len(), |k| self.apply_one(k, &xc));
        self.solves.fetch_add(self.solves_per_apply(), Ordering::Relaxed);
        ordered_total(parts, self.reg.hvp(x))
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }
}

/// Exact penalty Hessian as the Schur complement of `∇²𝒫(m, u)` at `u_λ`:
///
/// `∇²φ_λ x = λ Re(GᴴG + R(m,u,r)) x − Re(P_umᴴ P_uu⁻¹ P_um x)`
///
/// with `r = A u_λ − q`, `P_um = λ(AᴴG + K(m, r))`, `P_uu = λS`.
#[derive(Debug)]
pub struct PenaltyFullHessian {
    pub(crate) dim: usize,
    pub(crate) lambda: f64,
    pub(crate) systems: Vec<Arc<PenaltySystem>>,
    pub(crate) gs: Vec<SparseComplexMatrix>,
    pub(crate) ks: Vec<SparseComplexMatrix>,
    pub(crate) rs: Vec<SparseComplexMatrix>,
    pub(crate) reg: Regularizer,
    pub(crate) solves: AtomicUsize,
}

impl PenaltyFullHessian {
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn apply_one(&self, k: usize, x: &[Complex64]) -> Vec<f64> {
        let (g, kk, r, sys) = (&self.gs[k], &self.ks[k], &self.rs[k], &self.systems[k]);
        let a = sys.matrix();
        let gx = g.mul_vec(x);
        let mut y: Vec<f64> = re_adjoint(g, &gx).iter().zip(r.mul_vec(x)).map(|(u, v)| u + v.re).collect();
        let mut w = a.adjoint_mul_vec(&gx);
        w.iter_mut().zip(kk.mul_vec(x)).for_each(|(a, b)| *a += b);
        let z = sys.solve(&w);
        let back: Vec<f64> = re_adjoint(g, &a.mul_vec(&z)).iter().zip(re_adjoint(kk, &z)).map(|(u, v)| u + v).collect();
        y.iter_mut().zip(back).for_each(|(a, b)| *a = self.lambda * (*a - b));
        y
    }
}

impl LinearOperator<f64> for PenaltyFullHessian {
    fn nrows(&self) -> usize {
        self.dim
    }

    fn ncols(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let xc = complexify(x);
        let parts = map_indexed(self.gs.len(), |k| self.apply_one(k, &xc));
        self.solves.fetch_add(self.gs.len(), Ordering::Relaxed);
        ordered_total(parts, self.reg.hvp(x))
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }
}
