use nalgebra::{DMatrix, DVector};

use super::{IterationRecord, OptConfig, Status};
use crate::linalg::scalar::sub;
use crate::linalg::SparseComplexMatrix;
use crate::objectives::{lagrangian_gradient, LagrangianGradient, Problem};
use crate::{check_len, Complex64, Error, Result};

/// Largest `M + 2KN` the dense KKT system is built for.
pub const DEFAULT_KKT_CAP: usize = 2000;

#[derive(Debug, Clone)]
pub struct AllAtOnceResult {
    pub m: Vec<f64>,
    pub u: Vec<Vec<Complex64>>,
    pub v: Vec<Vec<Complex64>>,
    pub records: Vec<IterationRecord>,
    pub status: Status,
}

/// Real unknowns are laid out as `m`, then `(Re u_k, Im u_k)` for every `k`,
/// then `(Re v_k, Im v_k)` for every `k`.
struct Layout {
    m: usize,
    n: usize,
    k: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.m + 4 * self.k * self.n
    }
    fn u(&self, k: usize) -> usize {
        self.m + 2 * k * self.n
    }
    fn v(&self, k: usize) -> usize {
        self.m + 2 * (self.k + k) * self.n
    }

    fn pack(&self, m: &[f64], u: &[Vec<Complex64>], v: &[Vec<Complex64>]) -> DVector<f64> {
        let mut x = DVector::zeros(self.len());
        x.rows_mut(0, self.m).copy_from_slice(m);
        for k in 0..self.k {
            for (off, z) in [(self.u(k), &u[k]), (self.v(k), &v[k])] {
                for (i, c) in z.iter().enumerate() {
                    x[off + i] = c.re;
                    x[off + self.n + i] = c.im;
                }
            }
        }
        x
    }

    #[allow(clippy::type_complexity)]
    fn unpack(&self, x: &DVector<f64>) -> (Vec<f64>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let complex = |off: usize| (0..self.n).map(|i| Complex64::new(x[off + i], x[off + self.n + i])).collect();
        let m = x.rows(0, self.m).iter().cloned().collect();
        ((m), (0..self.k).map(|k| complex(self.u(k))).collect(), (0..self.k).map(|k| complex(self.v(k))).collect())
    }

    fn gradient(&self, g: &LagrangianGradient) -> DVector<f64> {
        self.pack(&g.lm, &g.lu, &g.lv)
    }
}

/// Adds the realification of the complex-linear block `c` acting on a
/// complex unknown at column `col` and producing complex rows at `row`.
fn add_complex_block(h: &mut DMatrix<f64>, row: usize, col: usize, c: &SparseComplexMatrix) {
    let (nr, nc) = (c.nrows(), c.ncols());
    for (i, j, z) in c.triplets() {
        h[(row + i, col + j)] += z.re;
        h[(row + i, col + nc + j)] -= z.im;
        h[(row + nr + i, col + j)] += z.im;
        h[(row + nr + i, col + nc + j)] += z.re;
    }
}

/// Adds the block mapping real `δm` to complex rows at `row`, and its
/// transpose `Re(cᴴ ·)` in the model rows.
fn add_model_coupling(h: &mut DMatrix<f64>, row: usize, c: &SparseComplexMatrix) {
    let nr = c.nrows();
    for (i, j, z) in c.triplets() {
        h[(row + i, j)] += z.re;
        h[(row + nr + i, j)] += z.im;
        h[(j, row + i)] += z.re;
        h[(j, row + nr + i)] += z.im;
    }
}

/// Dense realified Hessian of the Lagrangian at `(m, u, v)`:
///
/// ```text
/// [ Re R + αDᵀD   Kᴴ      Gᴴ ]
/// [ K             PᴴP     Aᴴ ]
/// [ G             A       0  ]
/// ```
///
/// with one `(u_k, v_k)` block pair per experiment.
pub fn kkt_matrix(problem: &Problem, m: &[f64], u: &[Vec<Complex64>], v: &[Vec<Complex64>]) -> Result<DMatrix<f64>> {
    let model = problem.model.as_ref();
    let ex = &problem.experiments.experiments;
    let lay = Layout { m: m.len(), n: model.state_dim(), k: ex.len() };
    let a = model.assemble(m)?;
    let ah = a.adjoint();
    let mut h = DMatrix::<f64>::zeros(lay.len(), lay.len());
    if problem.reg.alpha > 0.0 {
        for (i, j, x) in problem.reg.d.gram().triplets() {
            h[(i, j)] += problem.reg.alpha * x;
        }
    }
    for (k, e) in ex.iter().enumerate() {
        for (i, j, z) in model.hessian_r(m, &u[k], &v[k])?.triplets() {
            h[(i, j)] += z.re;
        }
        add_model_coupling(&mut h, lay.u(k), &model.jacobian_k(m, &v[k])?);
        add_model_coupling(&mut h, lay.v(k), &model.jacobian_g(m, &u[k])?);
        add_complex_block(&mut h, lay.u(k), lay.u(k), &e.p.gram());
        add_complex_block(&mut h, lay.u(k), lay.v(k), &ah);
        add_complex_block(&mut h, lay.v(k), lay.u(k), &a);
    }
    Ok(h)
}

fn lagrangian_value(problem: &Problem, m: &[f64], u: &[Vec<Complex64>], v: &[Vec<Complex64>]) -> Result<f64> {
    let a = problem.model.assemble(m)?;
    let mut val = problem.reg.value(m);
    for (k, e) in problem.experiments.iter().enumerate() {
        let res = sub(&e.p.mul_vec(&u[k]), &e.d);
        let r = sub(&a.mul_vec(&u[k]), &e.q);
        val += 0.5 * res.iter().map(|z| z.norm_sqr()).sum::<f64>();
        val += v[k].iter().zip(&r).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
    }
    Ok(val)
}

#[allow(clippy::too_many_arguments)]
fn record(problem: &Problem, k: usize, m: &[f64], u: &[Vec<Complex64>], v: &[Vec<Complex64>], g: &LagrangianGradient, step: f64, truth: Option<&[f64]>) -> Result<IterationRecord> {
    let data: f64 = problem.experiments.iter().zip(u).map(|(e, uk)| sub(&e.p.mul_vec(uk), &e.d).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    Ok(IterationRecord {
        k,
        lambda: None,
        value: lagrangian_value(problem, m, u, v)?,
        norm_lm: g.norm_lm,
        norm_lu: g.norm_lu,
        norm_lv: g.norm_lv,
        data_misfit: data.sqrt(),
        pde_misfit: g.norm_lv,
        model_error: truth.map(|t| m.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()),
        step,
        pde_solves: 0,
        eval_solves: 0,
        cg_iterations: 0,
        hvp_solves: 0,
        status: Status::Running,
    })
}

/// Solves `H x = b`, retrying with growing diagonal shifts when `H` is
/// numerically singular.
fn solve_shifted(h: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.amax().max(f64::MIN_POSITIVE);
    for shift in [0.0, 1e-12, 1e-10, 1e-8] {
        let mut hs = h.clone();
        if shift > 0.0 {
            for i in 0..hs.nrows() {
                hs[(i, i)] += shift * scale;
            }
        }
        if let Some(x) = hs.lu().solve(b) {
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
    }
    None
}

/// Newton's method on `∇ℒ(m, u, v) = 0` with the dense KKT matrix.
///
/// Steps are globalized by halving until `‖∇ℒ‖` decreases by the factor
/// `1 − c1·α` and `m` stays positive. No PDE solves are counted: every step
/// is one dense factorization.
pub fn all_at_once_newton(
    problem: &Problem,
    m0: &[f64],
    u0: &[Vec<Complex64>],
    v0: &[Vec<Complex64>],
    cfg: &OptConfig,
    truth: Option<&[f64]>,
) -> Result<AllAtOnceResult> {
    let model = problem.model.as_ref();
    model.check_model(m0)?;
    let kx = problem.experiments.len();
    check_len("initial states", u0.len(), kx)?;
    check_len("initial adjoints", v0.len(), kx)?;
    let lay = Layout { m: m0.len(), n: model.state_dim(), k: kx };
    let complex_dim = lay.m + 2 * lay.k * lay.n;
    if complex_dim > DEFAULT_KKT_CAP {
        return Err(crate::linalg::LinalgError::DimensionCap { dim: complex_dim, cap: DEFAULT_KKT_CAP }.into());
    }
    let (mut m, mut u, mut v) = (m0.to_vec(), u0.to_vec(), v0.to_vec());
    let mut grad = lagrangian_gradient(problem, &m, &u, &v)?;
    let mut records = vec![record(problem, 0, &m, &u, &v, &grad, 0.0, truth)?];
    let c1 = cfg.linesearch.c1;
    let status = loop {
        let gnorm = grad.norm();
        if gnorm <= cfg.epsilon {
            break Status::Converged;
        }
        if records.len() > cfg.max_iter {
            break Status::MaxIterations;
        }
        let h = kkt_matrix(problem, &m, &u, &v)?;
        let f = lay.gradient(&grad);
        let Some(dx) = solve_shifted(&h, &(-&f)) else {
            break Status::SingularSystem;
        };
        let x = lay.pack(&m, &u, &v);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.linesearch.max_trials {
            let (mt, ut, vt) = lay.unpack(&(&x + &dx * alpha));
            if mt.iter().all(|v| *v > 0.0 && v.is_finite()) {
                let gt = lagrangian_gradient(problem, &mt, &ut, &vt)?;
                if gt.norm() <= (1.0 - c1 * alpha) * gnorm {
                    accepted = Some((mt, ut, vt, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((mt, ut, vt, gt)) = accepted else {
            break Status::LineSearchFailed;
        };
        (m, u, v, grad) = (mt, ut, vt, gt);
        records.push(record(problem, records.len(), &m, &u, &v, &grad, alpha, truth)?);
    };
    if let Some(r) = records.last_mut() {
        r.status = status;
    }
    if status == Status::SingularSystem {
        return Err(Error::Linalg(crate::linalg::LinalgError::Singular { index: records.len() }));
    }
    Ok(AllAtOnceResult { m, u, v, records, status })
}
