//! Misfit surfaces `φ(m* + a₁v₁ + a₂v₂)` and their penalty counterparts.

use std::fmt::Write as _;

use penopt::objectives::{penalty_objective, reduced_objective, EvalLevel, Problem, Regularizer};
use penopt::optim::select_lambda_initial;

use crate::config::LandscapeSpec;
use crate::error::{ExpError, Result};
use crate::records::fmt_f64;
use crate::resample::ModelGrid;

pub const LANDSCAPE_HEADER: &str = "a1,a2,value,surface";

/// The two lowest-frequency separable cosine modes over `grid`, unit
/// Euclidean norm: `cos(πξ₁)` and `cos(πξ₂)` in 2D, `cos(πξ)` and `cos(2πξ)`
/// in 1D, with `ξ` the normalized grid coordinate.
pub fn cosine_modes(grid: &ModelGrid) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let n1 = grid.dims[0];
    let xi = |axis: usize, i: usize| i as f64 / (grid.dims[axis] - 1) as f64;
    let (v1, v2): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .map(|k| match grid.dim() {
            1 => ((PI * xi(0, k)).cos(), (2.0 * PI * xi(0, k)).cos()),
            _ => ((PI * xi(0, k % n1)).cos(), (PI * xi(1, k / n1)).cos()),
        })
        .unzip();
    let unit = |v: Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    };
    (unit(v1), unit(v2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    /// `reduced` or `lambda_<λ̃>`.
    pub id: String,
    /// `(a1, a2, value)`; `None` where the model left the admissible set or
    /// the evaluation failed.
    pub cells: Vec<(f64, f64, Option<f64>)>,
}

impl Surface {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{LANDSCAPE_HEADER}\n");
        for (a1, a2, v) in &self.cells {
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(*a1), fmt_f64(*a2), v.map(fmt_f64).unwrap_or_default(), self.id);
        }
        out
    }
}

fn check_modes(v1: &[f64], v2: &[f64]) -> Result<()> {
    let dot: f64 = v1.iter().zip(v2).map(|(a, b)| a * b).sum();
    let n1 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n2 = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 || dot.abs() >= (1.0 - 1e-12) * n1 * n2 {
        return Err(ExpError::Config("landscape directions must be nonzero and not parallel".into()));
    }
    Ok(())
}

/// Data-misfit surfaces around `center` (regularization is left out). The
/// penalty parameter of each `λ̃` is fixed from `center`.
pub fn misfit_landscape(problem: &Problem, center: &[f64], v1: &[f64], v2: &[f64], spec: &LandscapeSpec) -> Result<Vec<Surface>> {
    check_modes(v1, v2)?;
    let mut plain = problem.clone();
    plain.reg = Regularizer::none(problem.model_dim());
    let grid: Vec<(f64, f64)> = spec.a2.values().into_iter().flat_map(|b| spec.a1.values().into_iter().map(move |a| (a, b))).collect();
    let model_at = |a: f64, b: f64| -> Vec<f64> { center.iter().zip(v1).zip(v2).map(|((c, x), y)| c + a * x + b * y).collect() };
    let scan = |f: &dyn Fn(&[f64]) -> penopt::Result<f64>| -> Vec<(f64, f64, Option<f64>)> {
        grid.iter()
            .map(|&(a, b)| {
                let m = model_at(a, b);
                (a, b, f(&m).ok().filter(|v| v.is_finite()))
            })
            .collect()
    };
    let mut out = vec![];
    if spec.reduced {
        out.push(Surface { id: "reduced".into(), cells: scan(&|m| Ok(reduced_objective(&plain, m, EvalLevel::Value)?.value)) });
    }
    for &lt in &spec.lambdas {
        let lambda = select_lambda_initial(&plain, center, lt)?;
        out.push(Surface { id: format!("lambda_{}", fmt_f64(lt)), cells: scan(&|m| Ok(penalty_objective(&plain, m, lambda, EvalLevel::Value)?.value)) });
    }
    Ok(out)
}
