use super::LineSearchConfig;
use crate::{Error, Result};

/// Value and directional derivative of `φ(α) = f(m + αp)` at one trial step,
/// with whatever the caller wants to keep from the evaluation.
#[derive(Debug)]
pub struct Trial<T> {
    pub value: f64,
    pub slope: f64,
    pub payload: T,
}

#[derive(Debug)]
pub struct LineSearchOutcome<T> {
    pub alpha: f64,
    pub trial: Trial<T>,
    /// Evaluations spent.
    pub trials: usize,
    /// False when the step only satisfies the sufficient-decrease test
    /// (capped expansion or trial budget spent after an Armijo point).
    pub wolfe: bool,
}

/// Relative level below which value differences are treated as round-off.
const VALUE_NOISE: f64 = 1e-12;

/// Weak Wolfe line search by bisection and doubling.
///
/// `phi(α)` returns `None` for an infeasible trial, which counts as `+∞`.
/// Expansion never goes past `alpha_max`; if the curvature condition still
/// fails there, the step at `alpha_max` is returned with `wolfe == false`.
///
/// Sufficient decrease also accepts the approximate form
/// `φ(α) ≤ φ(0) + 1e-12|φ(0)|` with `φ'(α) ≤ (2c1 − 1)φ'(0)`, so that steps
/// near a minimizer are not rejected on round-off alone.
pub fn weak_wolfe_linesearch<T>(
    mut phi: impl FnMut(f64) -> Result<Option<Trial<T>>>,
    f0: f64,
    slope0: f64,
    alpha0: f64,
    alpha_max: f64,
    cfg: &LineSearchConfig,
) -> Result<LineSearchOutcome<T>> {
    if !(slope0 < 0.0) {
        return Err(Error::LineSearch(format!("not a descent direction (slope {slope0:e})")));
    }
    if !(alpha0 > 0.0 && alpha0 <= alpha_max) {
        return Err(Error::LineSearch(format!("initial step {alpha0} outside (0, {alpha_max}]")));
    }
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut best: Option<(f64, Trial<T>)> = None;
    let mut alpha = alpha0;
    for n in 1..=cfg.max_trials {
        let armijo_ok = match phi(alpha)? {
            None => None,
            Some(t) => {
                let armijo = t.value <= f0 + cfg.c1 * alpha * slope0
                    || (t.value <= f0 + VALUE_NOISE * f0.abs() && t.slope <= (2.0 * cfg.c1 - 1.0) * slope0);
                armijo.then_some(t)
            }
        };
        match armijo_ok {
            None => hi = alpha,
            Some(t) if t.slope < cfg.c2 * slope0 => {
                lo = alpha;
                if alpha >= alpha_max {
                    return Ok(LineSearchOutcome { alpha, trial: t, trials: n, wolfe: false });
                }
                best = Some((alpha, t));
            }
            Some(t) => return Ok(LineSearchOutcome { alpha, trial: t, trials: n, wolfe: true }),
        }
        alpha = if hi.is_finite() { 0.5 * (lo + hi) } else { (2.0 * lo).min(alpha_max) };
    }
    match best {
        Some((alpha, trial)) => Ok(LineSearchOutcome { alpha, trial, trials: cfg.max_trials, wolfe: false }),
        None => Err(Error::LineSearch(format!("no sufficient decrease in {} trials", cfg.max_trials))),
    }
}
