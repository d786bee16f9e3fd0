//! Subcommands as library calls. Every command reads and writes files in
//! `output.dir`; all writes happen after the computation has finished.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use penopt::objectives::{reduced_objective, EvalLevel, Problem};
use penopt::optim::{minimize, Formulation, RunResult};
use penopt::Complex64;

use crate::arrays::ArrayFile;
use crate::config::{ExperimentConfig, FormulationKind};
use crate::error::{ExpError, Result};
use crate::landscape::{cosine_modes, misfit_landscape, Surface};
use crate::records::{fmt_f64, records_to_csv};
use crate::report::{error_bound_report, BoundReport};
use crate::resample::ModelGrid;
use crate::setup::{generate_data, initial_model, Generated, Scenario};
use crate::spectra::{spectral_table, summary_csv, SpectraCase};

pub const TRUTH_FINE: &str = "truth_fine.bin";
pub const TRUTH: &str = "truth.bin";
pub const DATA: &str = "data.bin";
pub const DATA_CLEAN: &str = "data_clean.bin";
pub const GEOMETRY: &str = "geometry.txt";
pub const RECORDS: &str = "records.csv";
pub const MODEL: &str = "model.bin";
pub const SUMMARY: &str = "summary.txt";
pub const REPORT: &str = "report.txt";

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(cfg.output.dir.clone())
}

pub fn model_file(grid: &ModelGrid, m: &[f64]) -> ArrayFile {
    ArrayFile::real(grid.dims.clone(), grid.spacing.clone(), grid.origin.clone(), m.to_vec())
}

/// Data as an `L × K` complex array, one column per source.
pub fn data_file(d: &[Vec<Complex64>]) -> ArrayFile {
    let l = d.first().map_or(0, Vec::len);
    ArrayFile::complex(vec![l, d.len()], d.iter().flatten().copied().collect())
}

pub fn read_data(path: &Path) -> Result<Vec<Vec<Complex64>>> {
    let f = ArrayFile::read(path)?;
    let [l, k] = f.dims[..] else {
        return Err(ExpError::Format("data array must be two-dimensional".into()));
    };
    let flat = f.into_complex()?;
    Ok((0..k).map(|j| flat[j * l..(j + 1) * l].to_vec()).collect())
}

fn geometry_text(sc: &Scenario) -> String {
    let mut s = String::new();
    let mut block = |name: &str, pts: &[Vec<f64>]| {
        let _ = writeln!(s, "{name} {}", pts.len());
        for p in pts {
            let _ = writeln!(s, "{}", p.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "));
        }
    };
    block("sources", &sc.sources);
    block("receivers", &sc.receivers);
    s
}

pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Generated> {
    let sc = Scenario::new(cfg)?;
    let g = generate_data(cfg, &sc)?;
    let dir = out_dir(cfg)?;
    model_file(&sc.data_grid, &g.truth_fine).write(&dir.join(TRUTH_FINE))?;
    model_file(&sc.inv_grid, &g.truth).write(&dir.join(TRUTH))?;
    data_file(&g.data).write(&dir.join(DATA))?;
    data_file(&g.data_clean).write(&dir.join(DATA_CLEAN))?;
    fs::write(dir.join(GEOMETRY), geometry_text(&sc))?;
    Ok(g)
}

/// Final state of an inversion.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub run: RunResult,
    /// `‖d − P A(m)⁻¹ q‖` at the final model, whatever the formulation.
    pub reduced_misfit: f64,
    /// `‖m − m*‖ / ‖m*‖`.
    pub relative_model_error: Option<f64>,
}

pub fn formulation(cfg: &ExperimentConfig) -> Formulation {
    match cfg.inversion.formulation {
        FormulationKind::Reduced => Formulation::Reduced,
        FormulationKind::Penalty => Formulation::Penalty,
    }
}

fn rel_err(m: &[f64], t: &[f64]) -> f64 {
    let num: f64 = m.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = t.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

pub fn run_inversion(cfg: &ExperimentConfig, problem: &Problem, m0: &[f64], truth: Option<&[f64]>) -> Result<Inversion> {
    let run = minimize(problem, formulation(cfg), m0, &cfg.optimizer.to_opt_config(), truth)?;
    let reduced_misfit = reduced_objective(problem, &run.m, EvalLevel::Value)?.diagnostics.data_misfit;
    let relative_model_error = truth.map(|t| rel_err(&run.m, t));
    Ok(Inversion { run, reduced_misfit, relative_model_error })
}

fn summary_text(inv: &Inversion) -> String {
    let r = &inv.run;
    let mut s = String::new();
    let _ = writeln!(s, "status {}", r.status.as_str());
    let _ = writeln!(s, "iterations {}", r.records.len().saturating_sub(1));
    let _ = writeln!(s, "pde_solves {}", r.total_solves());
    let _ = writeln!(s, "scaling_solves {}", r.scaling_solves);
    let _ = writeln!(s, "lambdas {}", r.lambdas.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "));
    let _ = writeln!(s, "reduced_data_misfit {}", fmt_f64(inv.reduced_misfit));
    if let Some(e) = inv.relative_model_error {
        let _ = writeln!(s, "relative_model_error {}", fmt_f64(e));
    }
    s
}

/// Loads the inversion inputs written by `generate`.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<(Scenario, Problem, Option<Vec<f64>>)> {
    let sc = Scenario::new(cfg)?;
    let dir = &cfg.output.dir;
    let d = read_data(&dir.join(DATA))?;
    let problem = sc.problem(d, cfg.inversion.alpha)?;
    let truth_path = dir.join(TRUTH);
    let truth = if truth_path.exists() { Some(ArrayFile::read(&truth_path)?.into_real()?) } else { None };
    Ok((sc, problem, truth))
}

pub fn cmd_invert(cfg: &ExperimentConfig) -> Result<Inversion> {
    let (sc, problem, truth) = load_problem(cfg)?;
    let guess_base = truth.clone().unwrap_or_else(|| vec![1.0; sc.inv_grid.len()]);
    let m0 = initial_model(&cfg.inversion.initial, &sc, &guess_base)?;
    let dir = out_dir(cfg)?;
    let inv = match run_inversion(cfg, &problem, &m0, truth.as_deref()) {
        Ok(inv) => inv,
        Err(e) => {
            fs::write(dir.join(SUMMARY), format!("status error\nmessage {e}\n"))?;
            return Err(e);
        }
    };
    fs::write(dir.join(RECORDS), records_to_csv(&inv.run.records))?;
    model_file(&sc.inv_grid, &inv.run.m).write(&dir.join(MODEL))?;
    fs::write(dir.join(SUMMARY), summary_text(&inv))?;
    Ok(inv)
}

pub fn cmd_landscape(cfg: &ExperimentConfig) -> Result<Vec<Surface>> {
    let spec = cfg.landscape.as_ref().ok_or_else(|| ExpError::Config("missing [landscape] section".into()))?;
    let (sc, problem, truth) = load_problem(cfg)?;
    let center = truth.ok_or_else(|| ExpError::Config(format!("landscape needs {TRUTH} in the output directory")))?;
    let (v1, v2) = cosine_modes(&sc.inv_grid);
    let surfaces = misfit_landscape(&problem, &center, &v1, &v2, spec)?;
    let dir = out_dir(cfg)?;
    for s in &surfaces {
        fs::write(dir.join(format!("landscape_{}.csv", s.id)), s.to_csv())?;
    }
    Ok(surfaces)
}

pub fn cmd_spectra(cfg: &ExperimentConfig) -> Result<Vec<SpectraCase>> {
    let spec = cfg.spectra.clone().unwrap_or_default();
    let cases = spectral_table(&spec)?;
    let dir = out_dir(cfg)?;
    for c in &cases {
        fs::write(dir.join(c.file_name()), c.to_csv())?;
    }
    fs::write(dir.join("spectra_summary.csv"), summary_csv(&cases))?;
    Ok(cases)
}

/// Bound report at the model written by `invert`. For reduced runs `λ̃` is
/// infinite and only the `ε̃` term remains.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<BoundReport> {
    let (_, problem, _) = load_problem(cfg)?;
    let m = ArrayFile::read(&cfg.output.dir.join(MODEL))?.into_real()?;
    let lambda_scaled = match cfg.inversion.formulation {
        FormulationKind::Penalty => cfg.optimizer.schedule.last().map_or(f64::INFINITY, |s| s.lambda),
        FormulationKind::Reduced => f64::INFINITY,
    };
    let rep = error_bound_report(&problem, &m, cfg.optimizer.epsilon, lambda_scaled)?;
    fs::write(out_dir(cfg)?.join(REPORT), rep.to_text())?;
    Ok(rep)
}
