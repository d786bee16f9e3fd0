use num_complex::Complex64;

use super::hessian::{GnHessian, GnKind};
use super::{norm_sq, ordered_total, re_adjoint, Diagnostics, EvalLevel, Objective, ObjectiveEval, Problem};
use crate::exec::try_map_indexed;
use crate::linalg::scalar::sub;
use crate::{check_len, Result};

/// `Σ_k ½‖A(m) u_k − q_k‖² + α/2‖Dm‖²` with the states held fixed.
pub fn equation_error_objective(problem: &Problem, m: &[f64], u_fixed: &[Vec<Complex64>], level: EvalLevel) -> Result<ObjectiveEval> {
    let model = problem.model.as_ref();
    model.check_model(m)?;
    let ex = &problem.experiments.experiments;
    check_len("fixed states", u_fixed.len(), ex.len())?;
    let a = model.assemble(m)?;
    let with_grad = level == EvalLevel::Gradient;
    let parts = try_map_indexed(ex.len(), |k| -> Result<_> {
        model.check_state(&u_fixed[k])?;
        let r = sub(&a.mul_vec(&u_fixed[k]), &ex[k].q);
        let g = if with_grad { Some(model.jacobian_g(m, &u_fixed[k])?) } else { None };
        let grad = g.as_ref().map(|g| re_adjoint(g, &r)).unwrap_or_default();
        let data_sq = norm_sq(&sub(&ex[k].p.mul_vec(&u_fixed[k]), &ex[k].d));
        Ok((norm_sq(&r), data_sq, g, grad, r))
    })?;
    let pde_sq: f64 = parts.iter().map(|p| p.0).sum();
    let data_sq: f64 = parts.iter().map(|p| p.1).sum();
    let value = 0.5 * pde_sq + problem.reg.value(m);
    let mut gs = vec![];
    let mut grads = vec![];
    let mut residuals = vec![];
    for (_, _, g, grad, r) in parts {
        gs.extend(g);
        grads.push(grad);
        residuals.push(r);
    }
    let (gradient, norm_lm, gn_hessian) = if with_grad {
        let gradient = ordered_total(grads, problem.reg.gradient(m));
        let n = gradient.iter().map(|x| x * x).sum::<f64>().sqrt();
        (gradient, n, Some(GnHessian::new(m.len(), GnKind::EquationError, gs, problem.reg.clone())))
    } else {
        (vec![], f64::NAN, None)
    };
    Ok(ObjectiveEval {
        value,
        gradient,
        diagnostics: Diagnostics { norm_lm, norm_lu: f64::NAN, norm_lv: pde_sq.sqrt(), data_misfit: data_sq.sqrt(), pde_misfit: pde_sq.sqrt() },
        pde_solves: 0,
        states: u_fixed.to_vec(),
        adjoints: residuals,
        gn_hessian,
    })
}

/// Equation-error formulation with states held fixed, as an [`Objective`].
#[derive(Debug, Clone, Copy)]
pub struct EquationErrorObjective<'a> {
    pub problem: &'a Problem,
    pub states: &'a [Vec<Complex64>],
}

impl Objective for EquationErrorObjective<'_> {
    fn model_dim(&self) -> usize {
        self.problem.model_dim()
    }

    fn evaluate(&self, m: &[f64], level: EvalLevel) -> Result<ObjectiveEval> {
        equation_error_objective(self.problem, m, self.states, level)
    }
}
