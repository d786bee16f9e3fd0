//! Eigenvalue shifts of the augmented normal matrix for the 1D operators.

use std::fmt::Write as _;

use penopt::augmented::{spectral_shift_report, SpectralReport, SPECTRAL_CSV_HEADER};
use penopt::linalg::SparseComplexMatrix;
use penopt::Complex64;

use crate::config::{ModelKind, ModelSection, SpectraSpec};
use crate::error::{ExpError, Result};
use crate::setup::build_model;

/// `L` rows of the `n × n` identity, evenly spread (the middle row when `L = 1`).
pub fn identity_rows(n: usize, l: usize) -> Result<SparseComplexMatrix> {
    if l == 0 || l > n {
        return Err(ExpError::Config(format!("cannot pick {l} sampling rows out of {n}")));
    }
    let idx: Vec<usize> = if l == 1 { vec![n / 2] } else { (0..l).map(|i| i * (n - 1) / (l - 1)).collect() };
    Ok(SparseComplexMatrix::from_triplets(l, n, idx.into_iter().enumerate().map(|(r, c)| (r, c, Complex64::new(1.0, 0.0))))?)
}

pub fn operator_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Parabolic => "parabolic",
        ModelKind::Helmholtz1d => "helmholtz1d",
        ModelKind::Helmholtz2d => "helmholtz2d",
    }
}

/// Reports for one operator and sampling size, at `m ≡ 1`.
#[derive(Debug, Clone)]
pub struct SpectraCase {
    pub operator: ModelKind,
    pub rows: usize,
    pub reports: Vec<SpectralReport>,
}

impl SpectraCase {
    pub fn file_name(&self) -> String {
        format!("spectra_{}_L{}.csv", operator_name(self.operator), self.rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{SPECTRAL_CSV_HEADER}\n");
        for r in &self.reports {
            r.write_csv_rows(&mut out);
        }
        out
    }
}

pub fn spectral_table(spec: &SpectraSpec) -> Result<Vec<SpectraCase>> {
    let mut cases = vec![];
    for &kind in &spec.operators {
        if kind == ModelKind::Helmholtz2d {
            return Err(ExpError::Config("spectral tables are for the 1D operators".into()));
        }
        let section = ModelSection { kind, omega: spec.omega, extents: None, data_grid: vec![spec.n], inversion_grid: vec![spec.n], inverse_crime: true };
        let model = build_model(&section, &[spec.n])?;
        let a = model.assemble(&vec![1.0; model.model_dim()])?;
        for &l in &spec.receivers {
            let p = identity_rows(model.state_dim(), l)?;
            cases.push(SpectraCase { operator: kind, rows: l, reports: spectral_shift_report(&a, &p, &spec.lambdas)? });
        }
    }
    Ok(cases)
}

pub const SUMMARY_HEADER: &str = "operator,L,lambda_scaled,shift_sum,cond_orig,cond_aug,ratio,bound_lo,bound_hi,bounds_hold";

pub fn summary_csv(cases: &[SpectraCase]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for c in cases {
        for r in &c.reports {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                operator_name(c.operator),
                c.rows,
                r.lambda_scaled,
                r.shift_sum,
                r.cond_orig,
                r.cond_aug,
                r.ratio,
                r.bound_lo,
                r.bound_hi,
                r.bounds_hold()
            );
        }
    }
    out
}
