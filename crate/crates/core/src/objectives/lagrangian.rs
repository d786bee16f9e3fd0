use num_complex::Complex64;

use super::{norm_sq, ordered_total, re_adjoint, Problem};
use crate::exec::try_map_indexed;
use crate::linalg::scalar::sub;
use crate::{check_len, Result};

/// Blocks of `∇ℒ` for `ℒ = Σ_k ½‖P_k u_k − d_k‖² + Re⟨v_k, A(m)u_k − q_k⟩ + α/2‖Dm‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianGradient {
    /// `Σ_k Re(G(m, u_k)ᴴ v_k) + α DᵀD m`.
    pub lm: Vec<f64>,
    /// `A(m)ᴴ v_k + P_kᴴ(P_k u_k − d_k)` per experiment.
    pub lu: Vec<Vec<Complex64>>,
    /// `A(m) u_k − q_k` per experiment.
    pub lv: Vec<Vec<Complex64>>,
    pub norm_lm: f64,
    pub norm_lu: f64,
    pub norm_lv: f64,
}

impl LagrangianGradient {
    pub fn norm(&self) -> f64 {
        (self.norm_lm.powi(2) + self.norm_lu.powi(2) + self.norm_lv.powi(2)).sqrt()
    }
}

pub fn lagrangian_gradient(problem: &Problem, m: &[f64], u: &[Vec<Complex64>], v: &[Vec<Complex64>]) -> Result<LagrangianGradient> {
    let model = problem.model.as_ref();
    model.check_model(m)?;
    let ex = &problem.experiments.experiments;
    check_len("states", u.len(), ex.len())?;
    check_len("adjoints", v.len(), ex.len())?;
    let a = model.assemble(m)?;
    let parts = try_map_indexed(ex.len(), |k| -> Result<_> {
        let e = &ex[k];
        model.check_state(&u[k])?;
        model.check_state(&v[k])?;
        let g = model.jacobian_g(m, &u[k])?;
        let lm = re_adjoint(&g, &v[k]);
        let mut lu = a.adjoint_mul_vec(&v[k]);
        lu.iter_mut().zip(e.p.adjoint_mul_vec(&sub(&e.p.mul_vec(&u[k]), &e.d))).for_each(|(x, y)| *x += y);
        let lv = sub(&a.mul_vec(&u[k]), &e.q);
        Ok((lm, lu, lv))
    })?;
    let mut lms = vec![];
    let mut lu = vec![];
    let mut lv = vec![];
    for (a, b, c) in parts {
        lms.push(a);
        lu.push(b);
        lv.push(c);
    }
    let lm = ordered_total(lms, problem.reg.gradient(m));
    Ok(LagrangianGradient {
        norm_lm: lm.iter().map(|x| x * x).sum::<f64>().sqrt(),
        norm_lu: lu.iter().map(|x| norm_sq(x)).sum::<f64>().sqrt(),
        norm_lv: lv.iter().map(|x| norm_sq(x)).sum::<f64>().sqrt(),
        lm,
        lu,
        lv,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::{helmholtz, parabolic};
    use super::super::{penalty_objective, reduced_objective, EvalLevel};
    use super::*;
    use crate::linalg::scalar::norm;
    use crate::optim::select_lambda_initial;

    #[test]
    fn reduced_states_satisfy_constraints() {
        let (problem, truth) = parabolic(21, 1e-4, false);
        let m: Vec<f64> = truth.iter().map(|t| t * 0.9).collect();
        let ev = reduced_objective(&problem, &m, EvalLevel::Gradient).unwrap();
        let lg = lagrangian_gradient(&problem, &m, &ev.states, &ev.adjoints).unwrap();
        let qn: f64 = problem.experiments.iter().map(|e| norm_sq(&e.q)).sum::<f64>().sqrt();
        let dn: f64 = problem.experiments.iter().map(|e| norm_sq(&e.d)).sum::<f64>().sqrt();
        assert!(lg.norm_lv <= 1e-10 * qn);
        assert!(lg.norm_lu <= 1e-10 * dn);
        let diff: f64 = lg.lm.iter().zip(&ev.gradient).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff <= 1e-12 * lg.norm_lm);
    }

    #[test]
    fn zero_multiplier() {
        let (problem, truth) = helmholtz(7, 0.0, false);
        let n = problem.model.state_dim();
        let u: Vec<Vec<Complex64>> = (0..2).map(|k| vec![Complex64::new(0.1 * k as f64, 0.2); n]).collect();
        let v = vec![vec![Complex64::new(0.0, 0.0); n]; 2];
        let lg = lagrangian_gradient(&problem, &truth, &u, &v).unwrap();
        assert_eq!(lg.norm_lm, 0.0);
        for (k, e) in problem.experiments.iter().enumerate() {
            let expect = e.p.adjoint_mul_vec(&sub(&e.p.mul_vec(&u[k]), &e.d));
            assert!(norm(&sub(&lg.lu[k], &expect)) == 0.0);
        }
    }

    #[test]
    fn penalty_states_approach_stationarity() {
        let (problem, truth) = parabolic(21, 0.0, false);
        let m: Vec<f64> = truth.iter().map(|t| t * 1.1).collect();
        let red = reduced_objective(&problem, &m, EvalLevel::Gradient).unwrap();
        let vred: f64 = red.adjoints.iter().map(|v| norm_sq(v)).sum::<f64>().sqrt();
        let base = select_lambda_initial(&problem, &m, 1.0).unwrap();
        let mut gaps = vec![];
        for lt in [16.0, 64.0, 256.0] {
            let lambda = lt * base;
            let ev = penalty_objective(&problem, &m, lambda, EvalLevel::Gradient).unwrap();
            let lg = lagrangian_gradient(&problem, &m, &ev.states, &ev.adjoints).unwrap();
            let scale: f64 = problem
                .experiments
                .iter()
                .zip(&ev.adjoints)
                .map(|(e, v)| norm(&problem.model.assemble(&m).unwrap().adjoint_mul_vec(v)) + norm(&e.p.adjoint_mul_vec(&e.d)))
                .sum();
            assert!(lg.norm_lu <= 1e-9 * scale, "scaled L_u {}", lg.norm_lu / scale);
            let gap = (lambda * lg.norm_lv - vred).abs() / vred;
            assert!(gap <= 0.25);
            gaps.push(gap);
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    }
}
