use num_complex::Complex64;

use super::grid::{difference_matrix, gradient_2d, Grid1D, Grid2D};
use super::{ForwardModel, Grid};
use crate::linalg::{SparseComplexMatrix, SparseRealMatrix};
use crate::Result;

/// Scalar Helmholtz operator `A(m) = diag(s(m)) − DᵀD` with node-based
/// slowness-squared `m`.
///
/// `s_i = ω² w_i m_i + iω√m_i / h_i` where `w_i` is ½ on the boundary and 1
/// inside, and the radiation term is present only on absorbing boundary
/// nodes (`h_i` the spacing normal to the boundary).
#[derive(Debug, Clone)]
pub struct Helmholtz {
    grid: Grid,
    pub omega: f64,
    w: Vec<f64>,
    absorbing: Vec<Option<f64>>,
    neg_lap: SparseComplexMatrix,
    d: SparseRealMatrix,
}

impl Helmholtz {
    /// 2D model with first-order radiation conditions on all four edges.
    pub fn new_2d(grid: Grid2D, omega: f64) -> Self {
        let n = grid.len();
        let absorbing: Vec<_> = (0..n).map(|k| grid.boundary_spacing(k)).collect();
        let w = absorbing.iter().map(|b| if b.is_some() { 0.5 } else { 1.0 }).collect();
        Self::build(Grid::Two(grid), omega, w, absorbing, gradient_2d(&grid))
    }

    /// 1D model with reflecting (Neumann) ends, `ω² diag(w∘m) − DᵀD`.
    pub fn new_1d_neumann(grid: Grid1D, omega: f64) -> Self {
        let mut w = vec![1.0; grid.n];
        w[0] = 0.5;
        w[grid.n - 1] = 0.5;
        Self::build(Grid::One(grid), omega, w, vec![None; grid.n], difference_matrix(grid.n, grid.h))
    }

    fn build(grid: Grid, omega: f64, w: Vec<f64>, absorbing: Vec<Option<f64>>, d: SparseRealMatrix) -> Self {
        let neg_lap = d.gram().scale(-1.0).to_complex();
        Self { grid, omega, w, absorbing, neg_lap, d }
    }

    /// `true` where the node carries a boundary contribution.
    pub fn boundary_mask(&self) -> Vec<bool> {
        self.w.iter().map(|&w| w < 1.0).collect()
    }

    fn s(&self, i: usize, m: f64) -> Complex64 {
        let om = self.omega;
        let re = om * om * self.w[i] * m;
        match self.absorbing[i] {
            Some(h) => Complex64::new(re, om * m.sqrt() / h),
            None => Complex64::new(re, 0.0),
        }
    }

    /// `∂s_i/∂m_i`.
    pub fn ds(&self, i: usize, m: f64) -> Complex64 {
        let om = self.omega;
        let re = om * om * self.w[i];
        match self.absorbing[i] {
            Some(h) => Complex64::new(re, om / (2.0 * h * m.sqrt())),
            None => Complex64::new(re, 0.0),
        }
    }

    /// `∂²s_i/∂m_i²`.
    pub fn d2s(&self, i: usize, m: f64) -> Complex64 {
        match self.absorbing[i] {
            Some(h) => Complex64::new(0.0, -self.omega / (4.0 * h * m.powf(1.5))),
            None => Complex64::new(0.0, 0.0),
        }
    }

    fn diag(&self, f: impl Fn(usize) -> Complex64) -> SparseComplexMatrix {
        let d: Vec<_> = (0..self.w.len()).map(f).collect();
        SparseComplexMatrix::from_diagonal(&d)
    }
}

impl ForwardModel for Helmholtz {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn state_dim(&self) -> usize {
        self.w.len()
    }

    fn model_dim(&self) -> usize {
        self.w.len()
    }

    fn model_coordinates(&self) -> Vec<Vec<f64>> {
        match self.grid {
            Grid::One(g) => g.nodes().into_iter().map(|x| vec![x]).collect(),
            Grid::Two(g) => (0..g.len())
                .map(|k| {
                    let (x1, x2) = g.coords(k);
                    vec![x1, x2]
                })
                .collect(),
        }
    }

    fn assemble(&self, m: &[f64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        let s: Vec<_> = m.iter().enumerate().map(|(i, &mi)| self.s(i, mi)).collect();
        Ok(self.neg_lap.add_scaled(Complex64::new(1.0, 0.0), &SparseComplexMatrix::from_diagonal(&s)))
    }

    fn jacobian_g(&self, m: &[f64], u: &[Complex64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        self.check_state(u)?;
        Ok(self.diag(|i| self.ds(i, m[i]) * u[i]))
    }

    fn jacobian_k(&self, m: &[f64], v: &[Complex64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        self.check_state(v)?;
        Ok(self.diag(|i| self.ds(i, m[i]).conj() * v[i]))
    }

    fn hessian_r(&self, m: &[f64], u: &[Complex64], v: &[Complex64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        self.check_state(u)?;
        self.check_state(v)?;
        let trips = (0..m.len()).filter(|&i| self.absorbing[i].is_some()).map(|i| (i, i, (self.d2s(i, m[i]) * u[i]).conj() * v[i]));
        Ok(SparseComplexMatrix::from_triplets(m.len(), m.len(), trips)?)
    }

    fn regularization_operator(&self) -> SparseRealMatrix {
        self.d.clone()
    }
}
