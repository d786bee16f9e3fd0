//! TOML experiment configuration.
//!
//! Every key can be overridden from the command line with `section.key=value`
//! where `value` is parsed as a TOML value (bare words fall back to strings).

use std::path::{Path, PathBuf};

use penopt::optim::{LambdaStage, LineSearchConfig, Method, OptConfig};
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `iωm... ` diffusion operator on cells of `[0, 1]`.
    Parabolic,
    Helmholtz1d,
    Helmholtz2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub omega: f64,
    /// `[x1_min, x1_max, x2_min, x2_max]`, 2D only. 1D domains are `[0, 1]`.
    #[serde(default)]
    pub extents: Option<[f64; 4]>,
    pub data_grid: Vec<usize>,
    pub inversion_grid: Vec<usize>,
    /// Allow generating data on the inversion grid itself.
    #[serde(default)]
    pub inverse_crime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    /// `1 + exp(−10(x − ½)²)`.
    Gaussian,
    Constant { value: f64 },
    /// Constant background with a smooth circular anomaly.
    Ultrasound {
        #[serde(default = "default_background")]
        background: f64,
        #[serde(default = "default_contrast")]
        contrast: f64,
        #[serde(default = "default_center")]
        center: [f64; 2],
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// Layered velocity increasing with depth `x1`, a dipping wedge and a
    /// slow near-surface zone; stored as squared slowness.
    Seismic,
    File { path: PathBuf },
}

fn default_background() -> f64 {
    0.25
}
fn default_contrast() -> f64 {
    0.3
}
fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}
fn default_radius() -> f64 {
    0.25
}

/// Evenly spaced points from `from` to `to`, both included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Locations {
    Points(Vec<Vec<f64>>),
    Lines { lines: Vec<LineSpec> },
}

impl Locations {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            Locations::Points(p) => p.clone(),
            Locations::Lines { lines } => lines
                .iter()
                .flat_map(|l| {
                    (0..l.count).map(move |i| {
                        let t = if l.count == 1 { 0.5 } else { i as f64 / (l.count - 1) as f64 };
                        l.from.iter().zip(&l.to).map(|(a, b)| a + t * (b - a)).collect()
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub sources: Locations,
    pub receivers: Locations,
    /// Source strength before division by the cell measure.
    #[serde(default = "one")]
    pub source_amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub percent: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationKind {
    Reduced,
    Penalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant { value: f64 },
    /// Truth smoothed by a Gaussian of width `sigma` (domain units).
    Smoothed { sigma: f64 },
    /// Velocity linear in depth `x1`, least-squares fit to the truth.
    DepthLinear,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSection {
    pub formulation: FormulationKind,
    #[serde(default)]
    pub alpha: f64,
    pub initial: InitialSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    GaussNewton,
    Lbfgs,
    AllAtOnce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub lambda: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub method: MethodKind,
    pub epsilon: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub cg_max_iter: usize,
    pub lbfgs_history: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_trials: usize,
    pub trigger_fraction: f64,
    pub schedule: Vec<StageSpec>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptConfig::default();
        Self {
            method: MethodKind::GaussNewton,
            epsilon: d.epsilon,
            delta: d.delta,
            max_iter: d.max_iter,
            cg_max_iter: d.cg_max_iter,
            lbfgs_history: d.lbfgs_history,
            c1: d.linesearch.c1,
            c2: d.linesearch.c2,
            max_trials: d.linesearch.max_trials,
            trigger_fraction: d.trigger_fraction,
            schedule: vec![],
        }
    }
}

impl OptimizerSection {
    pub fn to_opt_config(&self) -> OptConfig {
        OptConfig {
            method: match self.method {
                MethodKind::GaussNewton => Method::GaussNewton,
                MethodKind::Lbfgs => Method::Lbfgs,
                MethodKind::AllAtOnce => Method::AllAtOnce,
            },
            epsilon: self.epsilon,
            delta: self.delta,
            max_iter: self.max_iter,
            cg_max_iter: self.cg_max_iter,
            lbfgs_history: self.lbfgs_history,
            linesearch: LineSearchConfig { c1: self.c1, c2: self.c2, max_trials: self.max_trials },
            lambda_schedule: self.schedule.iter().map(|s| LambdaStage { lambda_scaled: s.lambda, max_iter: s.max_iter }).collect(),
            trigger_fraction: self.trigger_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.n <= 1 {
            return vec![self.min];
        }
        (0..self.n).map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub a1: Range,
    pub a2: Range,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "yes")]
    pub reduced: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraSpec {
    pub n: usize,
    pub omega: f64,
    pub receivers: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub operators: Vec<ModelKind>,
}

impl Default for SpectraSpec {
    fn default() -> Self {
        Self {
            n: 51,
            omega: 10.0 * std::f64::consts::PI,
            receivers: vec![1, 10, 20],
            lambdas: vec![0.1, 1.0, 10.0, 100.0],
            operators: vec![ModelKind::Parabolic, ModelKind::Helmholtz1d],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub truth: TruthSpec,
    pub geometry: Geometry,
    #[serde(default)]
    pub noise: NoiseSection,
    pub inversion: InversionSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub landscape: Option<LandscapeSpec>,
    #[serde(default)]
    pub spectra: Option<SpectraSpec>,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `a.b.c=value` to a TOML table, creating tables as needed.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| ExpError::Config(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in path {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ExpError::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse()?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExpError::Config(m));
        let m = &self.model;
        let dim = match m.kind {
            ModelKind::Parabolic | ModelKind::Helmholtz1d => 1,
            ModelKind::Helmholtz2d => 2,
        };
        if m.data_grid.len() != dim || m.inversion_grid.len() != dim {
            return bad(format!("{dim}D model needs {dim} grid sizes"));
        }
        if dim == 2 && m.extents.is_none() {
            return bad("2D model needs `extents`".into());
        }
        if !(m.omega > 0.0) {
            return bad(format!("omega must be positive, got {}", m.omega));
        }
        if !m.inverse_crime && m.data_grid.iter().zip(&m.inversion_grid).any(|(d, i)| d <= i) {
            return bad("data grid must be strictly finer than the inversion grid (or set inverse_crime = true)".into());
        }
        for p in self.geometry.sources.points().iter().chain(&self.geometry.receivers.points()) {
            if p.len() != dim {
                return bad(format!("location {p:?} does not have {dim} coordinates"));
            }
        }
        if self.noise.percent < 0.0 {
            return bad("noise percent must be nonnegative".into());
        }
        if self.noise.percent > 0.0 && self.noise.seed.is_none() {
            return bad("noisy runs need an explicit seed".into());
        }
        if self.inversion.formulation == FormulationKind::Penalty && self.optimizer.schedule.is_empty() && self.optimizer.method != MethodKind::AllAtOnce {
            return bad("penalty inversions need at least one `optimizer.schedule` stage".into());
        }
        self.optimizer.to_opt_config().validate()?;
        Ok(())
    }
}
