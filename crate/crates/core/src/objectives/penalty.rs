use std::sync::atomic::AtomicUsize;
use std::sync::Arc;

use num_complex::Complex64;

use super::hessian::{GnHessian, GnKind, PenaltyFullHessian};
use super::{norm_sq, ordered_total, re_adjoint, Diagnostics, EvalLevel, Objective, ObjectiveEval, Problem};
use crate::augmented::PenaltySystem;
use crate::exec::try_map_indexed;
use crate::linalg::scalar::sub;
use crate::linalg::{SparseComplexMatrix, SparseRealMatrix};
use crate::{Error, Result};

/// Factor `AᴴA + λ⁻¹PᴴP` once per distinct sampling operator.
fn factor_systems(problem: &Problem, a: &SparseComplexMatrix, lambda: f64) -> Result<Vec<Arc<PenaltySystem>>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidLambda(lambda));
    }
    let ex = &problem.experiments.experiments;
    let groups = problem.experiments.sampling_groups();
    let leaders: Vec<usize> = (0..ex.len()).filter(|&k| groups[k] == k).collect();
    let factored = try_map_indexed(leaders.len(), |i| PenaltySystem::factor(a.clone(), (*ex[leaders[i]].p).clone(), lambda).map(Arc::new))?;
    Ok(groups.iter().map(|g| factored[leaders.iter().position(|l| l == g).expect("leader")].clone()).collect())
}

struct Part {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    g: Option<SparseComplexMatrix>,
    grad: Vec<f64>,
    data_sq: f64,
    pde_sq: f64,
    lu_sq: f64,
}

/// `φ_λ(m) = Σ_k ½‖P_k u_λ,k − d_k‖² + λ/2‖A u_λ,k − q_k‖² + α/2‖Dm‖²`.
///
/// The gradient is `Σ_k Re(G(m, u_λ,k)ᴴ v_λ,k)` with `v_λ = λ(A u_λ − q)`: the
/// inner minimization over `u` removes any `∂u_λ/∂m` term.
pub fn penalty_objective(problem: &Problem, m: &[f64], lambda: f64, level: EvalLevel) -> Result<ObjectiveEval> {
    let model = problem.model.as_ref();
    model.check_model(m)?;
    let a = model.assemble(m)?;
    let systems = factor_systems(problem, &a, lambda)?;
    let ex = &problem.experiments.experiments;
    let with_grad = level == EvalLevel::Gradient;

    let parts = try_map_indexed(ex.len(), |k| -> Result<Part> {
        let e = &ex[k];
        let u = systems[k].state(&e.q, &e.d)?.u;
        let r = sub(&a.mul_vec(&u), &e.q);
        let v: Vec<Complex64> = r.iter().map(|x| x * lambda).collect();
        let res = sub(&e.p.mul_vec(&u), &e.d);
        let mut lu = a.adjoint_mul_vec(&v);
        lu.iter_mut().zip(e.p.adjoint_mul_vec(&res)).for_each(|(x, y)| *x += y);
        let (g, grad) = if with_grad {
            let g = model.jacobian_g(m, &u)?;
            let grad = re_adjoint(&g, &v);
            (Some(g), grad)
        } else {
            (None, vec![])
        };
        Ok(Part { data_sq: norm_sq(&res), pde_sq: norm_sq(&r), lu_sq: norm_sq(&lu), u, v, g, grad })
    })?;

    let data_sq: f64 = parts.iter().map(|p| p.data_sq).sum();
    let pde_sq: f64 = parts.iter().map(|p| p.pde_sq).sum();
    let lu_sq: f64 = parts.iter().map(|p| p.lu_sq).sum();
    let value = 0.5 * data_sq + 0.5 * lambda * pde_sq + problem.reg.value(m);
    let pde_solves = ex.len();

    let mut states = Vec::with_capacity(parts.len());
    let mut adjoints = Vec::with_capacity(parts.len());
    let mut grads = Vec::new();
    let mut gs = Vec::new();
    for p in parts {
        states.push(p.u);
        adjoints.push(p.v);
        if with_grad {
            grads.push(p.grad);
            gs.push(p.g.expect("jacobian with gradient"));
        }
    }
    let (gradient, norm_lm, gn_hessian) = if with_grad {
        let gradient = ordered_total(grads, problem.reg.gradient(m));
        let norm_lm = gradient.iter().map(|x| x * x).sum::<f64>().sqrt();
        let h = GnHessian::new(m.len(), GnKind::Penalty { systems, lambda }, gs, problem.reg.clone());
        (gradient, norm_lm, Some(h))
    } else {
        (vec![], f64::NAN, None)
    };

    Ok(ObjectiveEval {
        value,
        gradient,
        diagnostics: Diagnostics {
            norm_lm,
            norm_lu: lu_sq.sqrt(),
            // L_v = A u_λ − q
            norm_lv: pde_sq.sqrt(),
            data_misfit: data_sq.sqrt(),
            pde_misfit: pde_sq.sqrt(),
        },
        pde_solves,
        states,
        adjoints,
        gn_hessian,
    })
}

/// The penalty formulation at fixed `λ` as an [`Objective`].
#[derive(Debug, Clone, Copy)]
pub struct PenaltyObjective<'a> {
    pub problem: &'a Problem,
    pub lambda: f64,
}

impl Objective for PenaltyObjective<'_> {
    fn model_dim(&self) -> usize {
        self.problem.model_dim()
    }

    fn evaluate(&self, m: &[f64], level: EvalLevel) -> Result<ObjectiveEval> {
        penalty_objective(self.problem, m, self.lambda, level)
    }

    fn lambda(&self) -> Option<f64> {
        Some(self.lambda)
    }
}

/// Exact `∇²φ_λ` at `m` (matrix-free, one augmented solve per experiment per
/// application).
pub fn penalty_full_hessian_hvp(problem: &Problem, m: &[f64], lambda: f64) -> Result<PenaltyFullHessian> {
    let model = problem.model.as_ref();
    model.check_model(m)?;
    let a = model.assemble(m)?;
    let systems = factor_systems(problem, &a, lambda)?;
    let ex = &problem.experiments.experiments;
    let blocks = try_map_indexed(ex.len(), |k| -> Result<_> {
        let e = &ex[k];
        let u = systems[k].state(&e.q, &e.d)?.u;
        let r = sub(&a.mul_vec(&u), &e.q);
        Ok((model.jacobian_g(m, &u)?, model.jacobian_k(m, &r)?, model.hessian_r(m, &u, &r)?))
    })?;
    let (mut gs, mut ks, mut rs) = (vec![], vec![], vec![]);
    for (g, k, r) in blocks {
        gs.push(g);
        ks.push(k);
        rs.push(r);
    }
    Ok(PenaltyFullHessian { dim: m.len(), lambda, systems, gs, ks, rs, reg: problem.reg.clone(), solves: AtomicUsize::new(0) })
}

/// `λ Σ_k Re(G_kᴴ G_k) + α DᵀD`, the sparse approximation of the penalty
/// Gauss-Newton Hessian.
pub fn sparse_gn_hessian_penalty(problem: &Problem, m: &[f64], lambda: f64) -> Result<SparseRealMatrix> {
    let model = problem.model.as_ref();
    model.check_model(m)?;
    let a = model.assemble(m)?;
    let systems = factor_systems(problem, &a, lambda)?;
    let ex = &problem.experiments.experiments;
    let grams = try_map_indexed(ex.len(), |k| -> Result<SparseRealMatrix> {
        let u = systems[k].state(&ex[k].q, &ex[k].d)?.u;
        Ok(model.jacobian_g(m, &u)?.gram().real_part())
    })?;
    let mut h = SparseRealMatrix::zeros(m.len(), m.len());
    for g in &grams {
        h = h.add_scaled(lambda, g);
    }
    if problem.reg.alpha > 0.0 {
        h = h.add_scaled(problem.reg.alpha, &problem.reg.d.gram());
    }
    Ok(h)
}
