use std::sync::atomic::{AtomicUsize, Ordering};

use super::{IterationRecord, OptConfig};
use crate::augmented::ReducedSystem;
use crate::exec::try_map_indexed;
use crate::linalg::{power_iteration_largest, symmetric_operator};
use crate::objectives::Problem;
use crate::{Complex64, Error, Result};

const POWER_TOL: f64 = 1e-8;
const POWER_MAXIT: usize = 10_000;

/// `max_k μ₁(A⁻ᴴP_kᴴP_kA⁻¹)` at `m`, with the solves it took.
///
/// Power iteration runs on the `L × L` form `P A⁻¹A⁻ᴴ Pᴴ`, which has the
/// same nonzero spectrum.
pub(crate) fn penalty_scale(problem: &Problem, m: &[f64]) -> Result<(f64, usize)> {
    let sys = ReducedSystem::factor(problem.model.assemble(m)?)?;
    let ex = &problem.experiments.experiments;
    let groups = problem.experiments.sampling_groups();
    let leaders: Vec<usize> = (0..ex.len()).filter(|&k| groups[k] == k).collect();
    let solves = AtomicUsize::new(0);
    let mus = try_map_indexed(leaders.len(), |i| -> Result<f64> {
        let p = &ex[leaders[i]].p;
        if p.nrows() == 0 {
            return Ok(0.0);
        }
        let op = symmetric_operator(p.nrows(), |x: &[Complex64]| {
            solves.fetch_add(2, Ordering::Relaxed);
            p.mul_vec(&sys.solve(&sys.solve_adjoint(&p.adjoint_mul_vec(x))))
        });
        Ok(power_iteration_largest(&op, POWER_TOL, POWER_MAXIT)?)
    })?;
    let mu = mus.into_iter().fold(0.0, f64::max);
    if !(mu > 0.0) {
        return Err(Error::DegenerateScaling);
    }
    Ok((mu, solves.into_inner()))
}

/// `λ = λ̃ · μ₁(A(m0)⁻ᴴPᴴPA(m0)⁻¹)`, block maximum over experiments.
pub fn select_lambda_initial(problem: &Problem, m0: &[f64], lambda_scaled: f64) -> Result<f64> {
    if !(lambda_scaled > 0.0 && lambda_scaled.is_finite()) {
        return Err(Error::InvalidLambda(lambda_scaled));
    }
    problem.model.check_model(m0)?;
    Ok(lambda_scaled * penalty_scale(problem, m0)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContinuationState {
    /// Index into the schedule.
    pub stage: usize,
    /// Steps taken in this stage.
    pub iterations_in_stage: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageDecision {
    Continue,
    Advance,
    Done,
}

/// Decides after each step of a penalty stage whether to keep going, move
/// to the next `λ̃`, or stop.
///
/// A stage ends when it converges, exhausts its budget, or when the
/// constraint residual `‖L_v‖ = λ⁻¹‖v_λ‖` exceeds `trigger_fraction · ‖L_m‖`,
/// i.e. when the remaining error is dominated by the finite penalty rather
/// than by the model update. The last stage ignores the trigger.
pub fn lambda_continuation(state: &ContinuationState, record: &IterationRecord, cfg: &OptConfig) -> StageDecision {
    let stages = cfg.lambda_schedule.len();
    let last = state.stage + 1 >= stages;
    let converged = record.norm_lm <= cfg.epsilon;
    let exhausted = stages == 0 || state.iterations_in_stage >= cfg.lambda_schedule[state.stage.min(stages - 1)].max_iter;
    if last {
        return if converged || exhausted { StageDecision::Done } else { StageDecision::Continue };
    }
    if converged || exhausted || record.norm_lv > cfg.trigger_fraction * record.norm_lm {
        StageDecision::Advance
    } else {
        StageDecision::Continue
    }
}
