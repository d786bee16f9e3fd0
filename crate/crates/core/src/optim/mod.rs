//! Outer optimization: Gauss-Newton with inner CG, L-BFGS, a dense
//! all-at-once Newton method for small problems, and penalty-parameter
//! control.
//!
//! The drivers are sequential; only the objective evaluations inside them
//! fan out over experiments.

mod descent;
mod lambda;
mod linesearch;
mod newton;

pub use descent::{gauss_newton, lbfgs, minimize, Formulation};
pub use lambda::{lambda_continuation, select_lambda_initial, ContinuationState, StageDecision};
pub use linesearch::{weak_wolfe_linesearch, LineSearchOutcome, Trial};
pub use newton::{all_at_once_newton, kkt_matrix, AllAtOnceResult, DEFAULT_KKT_CAP};

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GaussNewton,
    Lbfgs,
    AllAtOnce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    pub c1: f64,
    pub c2: f64,
    pub max_trials: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 0.9, max_trials: 30 }
    }
}

/// One stage of a penalty schedule: a scaled parameter `λ̃` and an iteration
/// budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStage {
    pub lambda_scaled: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    pub method: Method,
    /// Stop when `‖L_m‖ ≤ epsilon` (or `‖∇ℒ‖` for all-at-once).
    pub epsilon: f64,
    /// Relative tolerance of the inner CG solve.
    pub delta: f64,
    pub max_iter: usize,
    pub cg_max_iter: usize,
    pub lbfgs_history: usize,
    pub linesearch: LineSearchConfig,
    /// Penalty stages in order; a single entry means fixed `λ`.
    pub lambda_schedule: Vec<LambdaStage>,
    /// Move to the next stage once `‖L_v‖ > trigger_fraction · ‖L_m‖`.
    pub trigger_fraction: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            method: Method::GaussNewton,
            epsilon: 1e-6,
            delta: 1e-3,
            max_iter: 50,
            cg_max_iter: 200,
            lbfgs_history: 5,
            linesearch: LineSearchConfig::default(),
            lambda_schedule: vec![],
            trigger_fraction: 0.1,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        let ls = &self.linesearch;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0 < ls.c1 && ls.c1 < ls.c2 && ls.c2 < 1.0) {
            return bad(format!("line search needs 0 < c1 < c2 < 1, got c1 = {}, c2 = {}", ls.c1, ls.c2));
        }
        if ls.max_trials == 0 {
            return bad("line search needs at least one trial".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.lbfgs_history == 0 {
            return bad("L-BFGS history must be at least 1".into());
        }
        if !(self.trigger_fraction > 0.0) {
            return bad(format!("trigger fraction must be positive, got {}", self.trigger_fraction));
        }
        for s in &self.lambda_schedule {
            if !(s.lambda_scaled > 0.0 && s.lambda_scaled.is_finite()) {
                return Err(Error::InvalidLambda(s.lambda_scaled));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Converged,
    MaxIterations,
    LineSearchFailed,
    SingularSystem,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::LineSearchFailed => "linesearch_failed",
            Status::SingularSystem => "singular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Status::Running, Status::Converged, Status::MaxIterations, Status::LineSearchFailed, Status::SingularSystem]
            .into_iter()
            .find(|v| v.as_str() == s)
    }
}

/// State of the run after iteration `k`. Row 0 of every stage is the
/// evaluation at its starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `None` for the reduced and all-at-once methods.
    pub lambda: Option<f64>,
    pub value: f64,
    pub norm_lm: f64,
    pub norm_lu: f64,
    pub norm_lv: f64,
    pub data_misfit: f64,
    pub pde_misfit: f64,
    /// `‖m − m*‖` when a ground truth was supplied.
    pub model_error: Option<f64>,
    pub step: f64,
    /// Cumulative PDE solves up to and including this iteration.
    pub pde_solves: usize,
    /// Solves spent on objective and gradient evaluations in this iteration.
    pub eval_solves: usize,
    pub cg_iterations: usize,
    /// Solves per Hessian-vector product.
    pub hvp_solves: usize,
    pub status: Status,
}

impl IterationRecord {
    /// `‖∇ℒ‖` over `(m, u, v)`.
    pub fn norm_lagrangian(&self) -> f64 {
        (self.norm_lm.powi(2) + self.norm_lu.powi(2) + self.norm_lv.powi(2)).sqrt()
    }
}

/// Checks that every row's solve delta equals its evaluation solves plus CG
/// iterations times solves per product.
pub fn reconcile_solves(records: &[IterationRecord]) -> bool {
    let mut prev = 0;
    records.iter().all(|r| {
        let ok = r.pde_solves == prev + r.eval_solves + r.cg_iterations * r.hvp_solves;
        prev = r.pde_solves;
        ok
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub m: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    /// States and adjoints at the final iterate.
    pub states: Vec<Vec<Complex64>>,
    pub adjoints: Vec<Vec<Complex64>>,
    /// Solves spent choosing `λ`, not included in the records.
    pub scaling_solves: usize,
    /// `λ` per schedule stage (empty for the reduced method).
    pub lambdas: Vec<f64>,
}

impl RunResult {
    pub fn total_solves(&self) -> usize {
        self.records.last().map_or(0, |r| r.pde_solves)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(OptConfig::default().validate().is_ok());
        let mut c = OptConfig::default();
        c.linesearch.c1 = 0.95;
        assert!(c.validate().is_err());
        let mut c = OptConfig::default();
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
        let mut c = OptConfig::default();
        c.lambda_schedule = vec![LambdaStage { lambda_scaled: -1.0, max_iter: 3 }];
        assert!(matches!(c.validate(), Err(Error::InvalidLambda(_))));
    }

    #[test]
    fn status_round_trip() {
        for s in [Status::Running, Status::Converged, Status::MaxIterations, Status::LineSearchFailed, Status::SingularSystem] {
            assert_eq!(Status::parse(s.as_str()), Some(s));
        }
        assert_eq!(Status::parse("nope"), None);
    }
}
