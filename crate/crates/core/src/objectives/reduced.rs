use std::sync::Arc;

use num_complex::Complex64;

use super::hessian::{GnHessian, GnKind};
use super::{norm_sq, ordered_total, re_adjoint, Diagnostics, EvalLevel, Objective, ObjectiveEval, Problem};
use crate::augmented::ReducedSystem;
use crate::exec::try_map_indexed;
use crate::linalg::scalar::sub;
use crate::linalg::SparseComplexMatrix;
use crate::Result;

struct Part {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    g: Option<SparseComplexMatrix>,
    grad: Vec<f64>,
    data_sq: f64,
    pde_sq: f64,
    lu_sq: f64,
    solves: usize,
}

/// `φ(m) = Σ_k ½‖P_k A(m)⁻¹q_k − d_k‖² + α/2‖Dm‖²`.
pub fn reduced_objective(problem: &Problem, m: &[f64], level: EvalLevel) -> Result<ObjectiveEval> {
    let model = problem.model.as_ref();
    model.check_model(m)?;
    let sys = Arc::new(ReducedSystem::factor(model.assemble(m)?)?);
    let a = sys.matrix();
    let ex = &problem.experiments.experiments;
    let with_grad = level == EvalLevel::Gradient;

    let parts = try_map_indexed(ex.len(), |k| -> Result<Part> {
        let e = &ex[k];
        let st = sys.state(&e.q)?;
        let u = st.u;
        let res = sub(&e.p.mul_vec(&u), &e.d);
        let pde_sq = st.residual_pde.powi(2);
        if !with_grad {
            return Ok(Part { u, v: vec![], g: None, grad: vec![], data_sq: norm_sq(&res), pde_sq, lu_sq: 0.0, solves: 1 });
        }
        let adj = sys.adjoint(&e.p, &e.d, &u)?;
        let v = adj.u;
        let g = model.jacobian_g(m, &u)?;
        let grad = re_adjoint(&g, &v);
        // L_u = Aᴴv + Pᴴ(Pu − d)
        let mut lu = a.adjoint_mul_vec(&v);
        lu.iter_mut().zip(e.p.adjoint_mul_vec(&res)).for_each(|(x, y)| *x += y);
        Ok(Part { u, v, g: Some(g), grad, data_sq: norm_sq(&res), pde_sq, lu_sq: norm_sq(&lu), solves: 2 })
    })?;

    let data_sq: f64 = parts.iter().map(|p| p.data_sq).sum();
    let pde_sq: f64 = parts.iter().map(|p| p.pde_sq).sum();
    let lu_sq: f64 = parts.iter().map(|p| p.lu_sq).sum();
    let pde_solves = parts.iter().map(|p| p.solves).sum();
    let value = 0.5 * data_sq + problem.reg.value(m);

    let mut states = Vec::with_capacity(parts.len());
    let mut adjoints = Vec::new();
    let mut grads = Vec::new();
    let mut gs = Vec::new();
    for p in parts {
        states.push(p.u);
        if with_grad {
            adjoints.push(p.v);
            grads.push(p.grad);
            gs.push(p.g.expect("jacobian with gradient"));
        }
    }
    let (gradient, norm_lm, gn_hessian) = if with_grad {
        let gradient = ordered_total(grads, problem.reg.gradient(m));
        let norm_lm = gradient.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ps = ex.iter().map(|e| e.p.clone()).collect();
        let h = GnHessian::new(m.len(), GnKind::Reduced { sys, ps }, gs, problem.reg.clone());
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

/// The reduced formulation as an [`Objective`].
#[derive(Debug, Clone, Copy)]
pub struct ReducedObjective<'a> {
    pub problem: &'a Problem,
}

impl Objective for ReducedObjective<'_> {
    fn model_dim(&self) -> usize {
        self.problem.model_dim()
    }

    fn evaluate(&self, m: &[f64], level: EvalLevel) -> Result<ObjectiveEval> {
        reduced_objective(self.problem, m, level)
    }
}
