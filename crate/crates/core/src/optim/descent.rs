use std::collections::VecDeque;

use super::lambda::{lambda_continuation, penalty_scale, ContinuationState, StageDecision};
use super::linesearch::{weak_wolfe_linesearch, Trial};
use super::newton::all_at_once_newton;
use super::{IterationRecord, Method, OptConfig, RunResult, Status};
use crate::linalg::pcg;
use crate::objectives::{reduced_objective, EvalLevel, Objective, ObjectiveEval, PenaltyObjective, Problem, ReducedObjective};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Reduced,
    Penalty,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Limited-memory inverse Hessian, two-loop recursion.
struct LbfgsMemory {
    cap: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl LbfgsMemory {
    fn new(cap: usize) -> Self {
        Self { cap, pairs: VecDeque::with_capacity(cap) }
    }

    /// Stores `(s, y)` unless `⟨s, y⟩ ≤ 1e-12 ‖s‖‖y‖`. Returns whether it was kept.
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) {
            return false;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let Some((s_last, y_last, _)) = self.pairs.back() else {
            let gn = norm(g);
            return g.iter().map(|v| -v / gn).collect();
        };
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = dot(s_last, y_last) / dot(y_last, y_last);
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// Bookkeeping shared by consecutive stages of one run.
struct Log<'a> {
    records: Vec<IterationRecord>,
    solves: usize,
    truth: Option<&'a [f64]>,
}

impl Log<'_> {
    fn push(&mut self, ev: &ObjectiveEval, lambda: Option<f64>, m: &[f64], step: f64, eval_solves: usize, cg: (usize, usize)) {
        self.solves += eval_solves + cg.0 * cg.1;
        let d = &ev.diagnostics;
        self.records.push(IterationRecord {
            k: self.records.len(),
            lambda,
            value: ev.value,
            norm_lm: d.norm_lm,
            norm_lu: d.norm_lu,
            norm_lv: d.norm_lv,
            data_misfit: d.data_misfit,
            pde_misfit: d.pde_misfit,
            model_error: self.truth.map(|t| norm(&m.iter().zip(t).map(|(a, b)| a - b).collect::<Vec<_>>())),
            step,
            pde_solves: self.solves,
            eval_solves,
            cg_iterations: cg.0,
            hvp_solves: cg.1,
            status: Status::Running,
        });
    }
}

struct Outcome {
    m: Vec<f64>,
    ev: ObjectiveEval,
    status: Status,
}

/// Runs GN or L-BFGS on one objective for at most `max_iter` steps.
///
/// `stop` sees each new record with the number of steps taken so far and
/// may end the run early; the outcome is then reported as `Running`.
fn descend(
    obj: &dyn Objective,
    m0: Vec<f64>,
    cfg: &OptConfig,
    max_iter: usize,
    log: &mut Log,
    stop: &mut dyn FnMut(&IterationRecord, usize) -> bool,
) -> Result<Outcome> {
    let gauss_newton = match cfg.method {
        Method::GaussNewton => true,
        Method::Lbfgs => false,
        Method::AllAtOnce => return Err(Error::Config("all-at-once runs through all_at_once_newton".into())),
    };
    let lambda = obj.lambda();
    let mut m = m0;
    let mut ev = obj.evaluate(&m, EvalLevel::Gradient)?;
    log.push(&ev, lambda, &m, 0.0, ev.pde_solves, (0, 0));
    let mut memory = LbfgsMemory::new(cfg.lbfgs_history);
    let mut iters = 0;
    let status = loop {
        if ev.diagnostics.norm_lm <= cfg.epsilon {
            break Status::Converged;
        }
        if iters >= max_iter {
            break Status::MaxIterations;
        }
        let g = ev.gradient.clone();
        let (mut p, cg) = if gauss_newton {
            let h = ev.gn_hvp();
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let res = pcg(h, &neg, cfg.delta, cfg.cg_max_iter);
            debug_assert_eq!(h.solves(), res.iterations * h.solves_per_apply());
            (res.x, (res.iterations, h.solves_per_apply()))
        } else {
            (memory.direction(&g), (0, 0))
        };
        if !(dot(&g, &p) < 0.0) {
            memory.pairs.clear();
            let gn = norm(&g);
            p = g.iter().map(|v| -v / gn).collect();
        }
        let slope0 = dot(&g, &p);
        let alpha_max = if gauss_newton { 1.0 } else { f64::INFINITY };
        let mut spent = 0;
        let search = weak_wolfe_linesearch(
            |alpha| {
                let trial: Vec<f64> = m.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
                if trial.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Ok(None);
                }
                let e = obj.evaluate(&trial, EvalLevel::Gradient)?;
                spent += e.pde_solves;
                Ok(Some(Trial { value: e.value, slope: dot(&e.gradient, &p), payload: (trial, e) }))
            },
            ev.value,
            slope0,
            1.0,
            alpha_max,
            &cfg.linesearch,
        );
        let out = match search {
            Ok(out) => out,
            Err(Error::LineSearch(_)) => {
                log.push(&ev, lambda, &m, 0.0, spent, cg);
                break Status::LineSearchFailed;
            }
            Err(e) => return Err(e),
        };
        let (m_new, ev_new) = out.trial.payload;
        if !gauss_newton {
            let s = m_new.iter().zip(&m).map(|(a, b)| a - b).collect();
            let y = ev_new.gradient.iter().zip(&g).map(|(a, b)| a - b).collect();
            memory.push(s, y);
        }
        m = m_new;
        ev = ev_new;
        iters += 1;
        log.push(&ev, lambda, &m, out.alpha, spent, cg);
        if stop(log.records.last().expect("record"), iters) {
            break Status::Running;
        }
    };
    if let Some(r) = log.records.last_mut() {
        r.status = status;
    }
    Ok(Outcome { m, ev, status })
}

fn finish(out: Outcome, log: Log, scaling_solves: usize, lambdas: Vec<f64>) -> RunResult {
    RunResult {
        m: out.m,
        records: log.records,
        status: out.status,
        states: out.ev.states,
        adjoints: out.ev.adjoints,
        scaling_solves,
        lambdas,
    }
}

/// Gauss-Newton on a fixed objective: `H p = −g` by CG to relative
/// tolerance `delta`, then a weak Wolfe step with `α ≤ 1`.
pub fn gauss_newton(obj: &dyn Objective, m0: &[f64], cfg: &OptConfig, truth: Option<&[f64]>) -> Result<RunResult> {
    let cfg = OptConfig { method: Method::GaussNewton, ..cfg.clone() };
    fixed(obj, m0, &cfg, truth)
}

/// L-BFGS on a fixed objective with a weak Wolfe line search.
pub fn lbfgs(obj: &dyn Objective, m0: &[f64], cfg: &OptConfig, truth: Option<&[f64]>) -> Result<RunResult> {
    let cfg = OptConfig { method: Method::Lbfgs, ..cfg.clone() };
    fixed(obj, m0, &cfg, truth)
}

fn fixed(obj: &dyn Objective, m0: &[f64], cfg: &OptConfig, truth: Option<&[f64]>) -> Result<RunResult> {
    cfg.validate()?;
    let mut log = Log { records: vec![], solves: 0, truth };
    let out = descend(obj, m0.to_vec(), cfg, cfg.max_iter, &mut log, &mut |_, _| false)?;
    Ok(finish(out, log, 0, obj.lambda().into_iter().collect()))
}

/// Minimizes the reduced or penalty objective of `problem` from `m0`.
///
/// For the penalty formulation `λ = λ̃ · μ₁(A⁻ᴴPᴴPA⁻¹)` at `m0` for every
/// schedule stage, and stages are switched by [`lambda_continuation`]; each
/// stage starts from the previous stage's model.
pub fn minimize(problem: &Problem, formulation: Formulation, m0: &[f64], cfg: &OptConfig, truth: Option<&[f64]>) -> Result<RunResult> {
    cfg.validate()?;
    if cfg.method == Method::AllAtOnce {
        let ev = reduced_objective(problem, m0, EvalLevel::Gradient)?;
        let res = all_at_once_newton(problem, m0, &ev.states, &ev.adjoints, cfg, truth)?;
        return Ok(RunResult { m: res.m, records: res.records, status: res.status, states: res.u, adjoints: res.v, scaling_solves: 0, lambdas: vec![] });
    }
    match formulation {
        Formulation::Reduced => fixed(&ReducedObjective { problem }, m0, cfg, truth),
        Formulation::Penalty => {
            if cfg.lambda_schedule.is_empty() {
                return Err(Error::Config("penalty runs need at least one schedule stage".into()));
            }
            problem.model.check_model(m0)?;
            let (scale, scaling_solves) = penalty_scale(problem, m0)?;
            let lambdas: Vec<f64> = cfg.lambda_schedule.iter().map(|s| s.lambda_scaled * scale).collect();
            let mut log = Log { records: vec![], solves: 0, truth };
            let mut m = m0.to_vec();
            let stages = lambdas.len();
            for (i, &lambda) in lambdas.iter().enumerate() {
                let obj = PenaltyObjective { problem, lambda };
                let mut stop = |rec: &IterationRecord, iters: usize| {
                    let state = ContinuationState { stage: i, iterations_in_stage: iters };
                    lambda_continuation(&state, rec, cfg) != StageDecision::Continue
                };
                let out = descend(&obj, m, cfg, cfg.lambda_schedule[i].max_iter, &mut log, &mut stop)?;
                if i + 1 == stages {
                    let mut out = out;
                    if out.status == Status::Running {
                        out.status = if out.ev.diagnostics.norm_lm <= cfg.epsilon { Status::Converged } else { Status::MaxIterations };
                        if let Some(r) = log.records.last_mut() {
                            r.status = out.status;
                        }
                    }
                    return Ok(finish(out, log, scaling_solves, lambdas));
                }
                if let Some(r) = log.records.last_mut() {
                    r.status = Status::Running;
                }
                m = out.m;
            }
            unreachable!("schedule is nonempty")
        }
    }
}
