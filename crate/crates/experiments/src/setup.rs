//! Models, ground truths, acquisition geometry and synthetic data.

use std::sync::Arc;

use penopt::augmented::ReducedSystem;
use penopt::exec::try_map_indexed;
use penopt::models::{sampling_operator, source_vector, ForwardModel, Grid1D, Grid2D, Helmholtz, Parabolic1D};
use penopt::objectives::{Experiment, ExperimentSet, Problem, Regularizer};
use penopt::Complex64;

use crate::arrays::ArrayFile;
use crate::config::{ExperimentConfig, InitialSpec, ModelKind, ModelSection, TruthSpec};
use crate::error::{ExpError, Result};
use crate::noise::add_noise;
use crate::resample::{resample, restrict_model, smooth, ModelGrid};

pub fn build_model(section: &ModelSection, sizes: &[usize]) -> Result<Arc<dyn ForwardModel>> {
    Ok(match (section.kind, sizes) {
        (ModelKind::Parabolic, [n]) => Arc::new(Parabolic1D::new(Grid1D::new(*n)?, section.omega)),
        (ModelKind::Helmholtz1d, [n]) => Arc::new(Helmholtz::new_1d_neumann(Grid1D::new(*n)?, section.omega)),
        (ModelKind::Helmholtz2d, [n1, n2]) => {
            let ext = section.extents.ok_or_else(|| ExpError::Config("2D model needs extents".into()))?;
            Arc::new(Helmholtz::new_2d(Grid2D::new(*n1, *n2, ext)?, section.omega))
        }
        _ => return Err(ExpError::Config(format!("grid {sizes:?} does not fit model {:?}", section.kind))),
    })
}

fn step(s: f64, width: f64) -> f64 {
    0.5 * (1.0 + (s / width).tanh())
}

/// Seismic stand-in at depth `z` and lateral position `x` (squared slowness).
fn seismic(z: f64, x: f64) -> f64 {
    // background velocity rising quickly, then flattening with depth
    let mut v = 1.8 + 2.4 * (1.0 - (-z / 1.5).exp());
    // dipping fast layer pinching out towards large x
    v += 0.5 * step(z - (1.5 + 0.1 * x), 0.1) * step(3.5 - z, 0.1);
    // slow pocket below the surface
    v -= 0.5 * (-((x - 12.0) / 2.5).powi(2)).exp() * (-(z / 0.8).powi(2)).exp();
    1.0 / (v * v)
}

/// Ground truth at the points of `grid`.
pub fn truth_on(spec: &TruthSpec, grid: &ModelGrid) -> Result<Vec<f64>> {
    let pts = grid.points();
    Ok(match spec {
        TruthSpec::Gaussian => pts.iter().map(|x| 1.0 + (-10.0 * (x[0] - 0.5).powi(2)).exp()).collect(),
        TruthSpec::Constant { value } => vec![*value; pts.len()],
        TruthSpec::Ultrasound { background, contrast, center, radius } => pts
            .iter()
            .map(|x| {
                let r = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt() / radius;
                let bump = if r < 1.0 { 0.5 * (1.0 + (std::f64::consts::PI * r).cos()) } else { 0.0 };
                background * (1.0 + contrast * bump)
            })
            .collect(),
        TruthSpec::Seismic => {
            if grid.dim() != 2 {
                return Err(ExpError::Config("seismic truth is 2D".into()));
            }
            pts.iter().map(|x| seismic(x[0], x[1])).collect()
        }
        TruthSpec::File { path } => from_file(path, grid)?,
    })
}

fn from_file(path: &std::path::Path, grid: &ModelGrid) -> Result<Vec<f64>> {
    let f = ArrayFile::read(path)?;
    let src = ModelGrid::new(f.dims.clone(), f.origin.clone(), f.spacing.clone())?;
    resample(&f.into_real()?, &src, grid)
}

/// Grids, models and acquisition positions of one configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub data_model: Arc<dyn ForwardModel>,
    pub inv_model: Arc<dyn ForwardModel>,
    pub data_grid: ModelGrid,
    pub inv_grid: ModelGrid,
    pub sources: Vec<Vec<f64>>,
    pub receivers: Vec<Vec<f64>>,
    pub amplitude: f64,
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let data_model = build_model(&cfg.model, &cfg.model.data_grid)?;
        let inv_model = build_model(&cfg.model, &cfg.model.inversion_grid)?;
        Ok(Self {
            data_grid: ModelGrid::of_model(data_model.as_ref()),
            inv_grid: ModelGrid::of_model(inv_model.as_ref()),
            data_model,
            inv_model,
            sources: cfg.geometry.sources.points(),
            receivers: cfg.geometry.receivers.points(),
            amplitude: cfg.geometry.source_amplitude,
        })
    }

    /// One experiment per source on `model`'s grid with data `d`.
    fn experiments(&self, model: &dyn ForwardModel, d: Vec<Vec<Complex64>>) -> Result<ExperimentSet> {
        let grid = model.grid();
        let p = Arc::new(sampling_operator(&grid, &self.receivers)?.matrix);
        let amp = Complex64::new(self.amplitude / grid.cell_measure(), 0.0);
        let exps = self
            .sources
            .iter()
            .zip(d)
            .map(|(s, dk)| Ok(Experiment { q: source_vector(&grid, s, amp)?, p: p.clone(), d: dk }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentSet::new(exps))
    }

    /// Noise-free data `P A(m)⁻¹ q_k` on the data grid.
    pub fn simulate(&self, m: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let model = self.data_model.as_ref();
        let set = self.experiments(model, vec![vec![]; self.sources.len()])?;
        let sys = ReducedSystem::factor(model.assemble(m)?)?;
        let exps: Vec<&Experiment> = set.iter().collect();
        Ok(try_map_indexed(exps.len(), |k| -> penopt::Result<_> {
            let e = exps[k];
            Ok(e.p.mul_vec(&sys.solve(&e.q)))
        })?)
    }

    /// Inversion problem on the coarse grid.
    pub fn problem(&self, d: Vec<Vec<Complex64>>, alpha: f64) -> Result<Problem> {
        let model = self.inv_model.clone();
        let set = self.experiments(model.as_ref(), d)?;
        let reg = Regularizer::for_model(model.as_ref(), alpha)?;
        Ok(Problem::new(model, set, reg)?)
    }
}

/// Everything `generate` produces.
#[derive(Debug, Clone)]
pub struct Generated {
    pub truth_fine: Vec<f64>,
    pub truth: Vec<f64>,
    pub data_clean: Vec<Vec<Complex64>>,
    pub data: Vec<Vec<Complex64>>,
}

pub fn generate_data(cfg: &ExperimentConfig, sc: &Scenario) -> Result<Generated> {
    let truth_fine = truth_on(&cfg.truth, &sc.data_grid)?;
    let truth = restrict_model(&truth_fine, &sc.data_grid, &sc.inv_grid)?;
    let data_clean = sc.simulate(&truth_fine)?;
    let data = match cfg.noise.seed {
        Some(seed) => add_noise(&data_clean, cfg.noise.percent, seed),
        None => data_clean.clone(),
    };
    Ok(Generated { truth_fine, truth, data_clean, data })
}

/// Starting model on the inversion grid.
pub fn initial_model(spec: &InitialSpec, sc: &Scenario, truth: &[f64]) -> Result<Vec<f64>> {
    let g = &sc.inv_grid;
    Ok(match spec {
        InitialSpec::Constant { value } => vec![*value; g.len()],
        InitialSpec::Smoothed { sigma } => smooth(truth, g, *sigma),
        InitialSpec::DepthLinear => {
            // least-squares fit v ≈ a + b z of the velocity v = m^{-1/2}
            let pts = g.points();
            let n = pts.len() as f64;
            let (mut sz, mut sv, mut szz, mut szv) = (0.0, 0.0, 0.0, 0.0);
            for (x, m) in pts.iter().zip(truth) {
                let (z, v) = (x[0], 1.0 / m.sqrt());
                sz += z;
                sv += v;
                szz += z * z;
                szv += z * v;
            }
            let b = (n * szv - sz * sv) / (n * szz - sz * sz);
            let a = (sv - b * sz) / n;
            pts.iter().map(|x| (a + b * x[0]).powi(-2)).collect()
        }
        InitialSpec::File { path } => from_file(path, g)?,
    })
}
