use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ReducedSystem;
use crate::linalg::{dense_hermitian_eigenvalues, SparseComplexMatrix, DEFAULT_DENSE_CAP};
use crate::Result;

pub const SPECTRAL_CSV_HEADER: &str = "lambda_scaled,index,mu_orig,mu_aug,shift,cond_orig,cond_aug,ratio,bound_lo,bound_hi";

/// Eigenvalues of `AᴴA` and `AᴴA + λ⁻¹PᴴP` for one scaled penalty parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub lambda_scaled: f64,
    pub lambda: f64,
    /// Number of sampling rows `L`.
    pub rows: usize,
    /// Descending.
    pub mu_orig: Vec<f64>,
    /// Descending.
    pub mu_aug: Vec<f64>,
    /// `aₙ = λ(μₙ(aug) − μₙ(orig))`.
    pub shifts: Vec<f64>,
    pub shift_sum: f64,
    pub cond_orig: f64,
    pub cond_aug: f64,
    /// `cond_aug / cond_orig`.
    pub ratio: f64,
    /// `κ / C_N` with `C_i = 1 + L/(λ μ_i)`.
    pub bound_lo: f64,
    /// `C_1 κ`.
    pub bound_hi: f64,
}

impl SpectralReport {
    pub fn bounds_hold(&self) -> bool {
        let slack = 1e-10 * self.cond_aug;
        self.bound_lo <= self.cond_aug + slack && self.cond_aug <= self.bound_hi + slack
    }

    /// Rows in the layout of [`SPECTRAL_CSV_HEADER`]: one per eigenvalue, then
    /// a `summary` row carrying the shift sum and condition numbers.
    pub fn write_csv_rows(&self, out: &mut String) {
        for (i, ((mo, ma), a)) in self.mu_orig.iter().zip(&self.mu_aug).zip(&self.shifts).enumerate() {
            let _ = writeln!(out, "{},{},{},{},{},,,,,", self.lambda_scaled, i + 1, mo, ma, a);
        }
        let _ = writeln!(
            out,
            "{},summary,,,{},{},{},{},{},{}",
            self.lambda_scaled, self.shift_sum, self.cond_orig, self.cond_aug, self.ratio, self.bound_lo, self.bound_hi
        );
    }
}

/// `‖P A⁻¹‖₂²`, the natural scale of the penalty parameter.
pub fn penalty_scale_dense(a: &SparseComplexMatrix, p: &SparseComplexMatrix) -> Result<f64> {
    let sys = ReducedSystem::factor(a.clone())?;
    let l = p.nrows();
    let n = a.ncols();
    // rows of C = P A⁻¹ are (A⁻ᴴ pᵢᴴ)ᴴ
    let mut c = DMatrix::<Complex64>::zeros(l, n);
    for i in 0..l {
        let mut e = vec![Complex64::new(0.0, 0.0); l];
        e[i] = Complex64::new(1.0, 0.0);
        let col = sys.solve_adjoint(&p.adjoint_mul_vec(&e));
        for (j, v) in col.iter().enumerate() {
            c[(i, j)] = v.conj();
        }
    }
    let cch = &c * c.adjoint();
    Ok(dense_hermitian_eigenvalues(&cch, DEFAULT_DENSE_CAP)?[0].max(0.0))
}

pub fn spectral_shift_report(a: &SparseComplexMatrix, p: &SparseComplexMatrix, lambda_scaled: &[f64]) -> Result<Vec<SpectralReport>> {
    let ad = a.to_dense();
    let ata = ad.adjoint() * &ad;
    let ata = (&ata + ata.adjoint()) * Complex64::new(0.5, 0.0);
    let mu_orig = dense_hermitian_eigenvalues(&ata, DEFAULT_DENSE_CAP)?;
    let ptp = p.gram().to_dense();
    let scale = penalty_scale_dense(a, p)?;
    let n = mu_orig.len();
    let rows = p.nrows();
    let cond_orig = mu_orig[0] / mu_orig[n - 1];
    let mut out = Vec::with_capacity(lambda_scaled.len());
    for &lt in lambda_scaled {
        let lambda = lt * scale;
        let aug = &ata + &ptp * Complex64::new(1.0 / lambda, 0.0);
        let mu_aug = dense_hermitian_eigenvalues(&aug, DEFAULT_DENSE_CAP)?;
        let shifts: Vec<f64> = mu_aug.iter().zip(&mu_orig).map(|(x, y)| lambda * (x - y)).collect();
        let shift_sum = lambda * (mu_aug.iter().sum::<f64>() - mu_orig.iter().sum::<f64>());
        let cond_aug = mu_aug[0] / mu_aug[n - 1];
        let c = |mu: f64| 1.0 + rows as f64 / (lambda * mu);
        out.push(SpectralReport {
            lambda_scaled: lt,
            lambda,
            rows,
            shift_sum,
            cond_orig,
            cond_aug,
            ratio: cond_aug / cond_orig,
            bound_lo: cond_orig / c(mu_orig[n - 1]),
            bound_hi: cond_orig * c(mu_orig[0]),
            mu_orig: mu_orig.clone(),
            mu_aug,
            shifts,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LinalgError;
    use crate::models::{ForwardModel, Grid1D, Parabolic1D};
    use crate::Error;
    use std::f64::consts::PI;

    fn identity_rows(n: usize, l: usize) -> SparseComplexMatrix {
        let idx: Vec<usize> = if l == 1 { vec![n / 2] } else { (0..l).map(|i| i * (n - 1) / (l - 1)).collect() };
        SparseComplexMatrix::from_triplets(l, n, idx.into_iter().enumerate().map(|(r, c)| (r, c, Complex64::new(1.0, 0.0)))).unwrap()
    }

    #[test]
    fn full_identity_sampling_shifts_by_one() {
        let model = Parabolic1D::new(Grid1D::new(21).unwrap(), 10.0 * PI);
        let a = model.assemble(&[1.0; 20]).unwrap();
        let p = SparseComplexMatrix::identity(21);
        let scale = penalty_scale_dense(&a, &p).unwrap();
        // with λ = λ̃·scale and P = √λ I the shift of every eigenvalue is 1
        let lambda = 3.0 * scale;
        let ps = p.scale(Complex64::new(lambda.sqrt(), 0.0));
        let reports = spectral_shift_report(&a, &ps, &[3.0 / lambda]).unwrap();
        let r = &reports[0];
        let spectrum_scale = r.mu_orig[0];
        for (x, y) in r.mu_aug.iter().zip(&r.mu_orig) {
            assert!((x - y - 1.0).abs() <= 1e-12 * spectrum_scale);
        }
    }

    #[test]
    fn parabolic_shift_sum_and_ratio() {
        let model = Parabolic1D::new(Grid1D::new(51).unwrap(), 10.0 * PI);
        let a = model.assemble(&[1.0; 50]).unwrap();
        for l in [1, 10, 20] {
            let p = identity_rows(51, l);
            for r in spectral_shift_report(&a, &p, &[0.1, 1.0, 10.0, 100.0]).unwrap() {
                assert!((r.shift_sum - l as f64).abs() <= 1e-8 * l as f64, "L={l} sum={}", r.shift_sum);
                assert!(r.ratio < 1.0);
                assert!(r.bounds_hold());
            }
        }
    }

    #[test]
    fn huge_lambda_leaves_conditioning_unchanged() {
        let model = Parabolic1D::new(Grid1D::new(31).unwrap(), 10.0 * PI);
        let a = model.assemble(&[1.0; 30]).unwrap();
        let r = &spectral_shift_report(&a, &identity_rows(31, 10), &[1e8]).unwrap()[0];
        assert!((r.ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn csv_layout() {
        let model = Parabolic1D::new(Grid1D::new(5).unwrap(), 1.0);
        let a = model.assemble(&[1.0; 4]).unwrap();
        let r = &spectral_shift_report(&a, &identity_rows(5, 2), &[1.0]).unwrap()[0];
        let mut s = String::new();
        r.write_csv_rows(&mut s);
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines.len(), 6);
        let cols = SPECTRAL_CSV_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
        assert!(lines[5].starts_with("1,summary,"));
    }

    #[test]
    fn over_cap_rejected() {
        let model = Parabolic1D::new(Grid1D::new(600).unwrap(), 1.0);
        let a = model.assemble(&vec![1.0; 599]).unwrap();
        let r = spectral_shift_report(&a, &identity_rows(600, 2), &[1.0]);
        assert!(matches!(r, Err(Error::Linalg(LinalgError::DimensionCap { .. }))));
    }
}
