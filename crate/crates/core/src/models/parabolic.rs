use num_complex::Complex64;

use super::grid::{difference_matrix, Grid1D};
use super::{ForwardModel, Grid};
use crate::linalg::{SparseComplexMatrix, SparseRealMatrix};
use crate::Result;

/// `A(m) = iω diag(w) + Dᵀ diag(m) D` on `[0, 1]` with Neumann ends and
/// conductivity `m` in the `N − 1` cells.
#[derive(Debug, Clone)]
pub struct Parabolic1D {
    pub grid: Grid1D,
    pub omega: f64,
    /// Lumped mass `[½, 1, …, 1, ½]`.
    pub w: Vec<f64>,
}

impl Parabolic1D {
    pub fn new(grid: Grid1D, omega: f64) -> Self {
        let mut w = vec![1.0; grid.n];
        w[0] = 0.5;
        w[grid.n - 1] = 0.5;
        Self { grid, omega, w }
    }

    /// `Dᵀ diag(Dx)` for a nodal vector `x`.
    fn dt_diag_d(&self, x: &[Complex64]) -> SparseComplexMatrix {
        let ih = 1.0 / self.grid.h;
        let trips = (0..self.grid.n - 1).flat_map(|j| {
            let dx = (x[j + 1] - x[j]) * ih;
            [(j, j, -dx * ih), (j + 1, j, dx * ih)]
        });
        SparseComplexMatrix::from_triplets(self.grid.n, self.grid.n - 1, trips).expect("valid stencil")
    }
}

impl ForwardModel for Parabolic1D {
    fn grid(&self) -> Grid {
        Grid::One(self.grid)
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn state_dim(&self) -> usize {
        self.grid.n
    }

    fn model_dim(&self) -> usize {
        self.grid.n - 1
    }

    fn model_coordinates(&self) -> Vec<Vec<f64>> {
        self.grid.cell_centres().into_iter().map(|x| vec![x]).collect()
    }

    fn assemble(&self, m: &[f64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        let ih2 = 1.0 / (self.grid.h * self.grid.h);
        let mut trips: Vec<_> = self.w.iter().enumerate().map(|(i, &wi)| (i, i, Complex64::new(0.0, self.omega * wi))).collect();
        for (j, &mj) in m.iter().enumerate() {
            let c = Complex64::new(mj * ih2, 0.0);
            trips.extend([(j, j, c), (j, j + 1, -c), (j + 1, j, -c), (j + 1, j + 1, c)]);
        }
        Ok(SparseComplexMatrix::from_triplets(self.grid.n, self.grid.n, trips)?)
    }

    fn jacobian_g(&self, m: &[f64], u: &[Complex64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        self.check_state(u)?;
        Ok(self.dt_diag_d(u))
    }

    fn jacobian_k(&self, m: &[f64], v: &[Complex64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        self.check_state(v)?;
        Ok(self.dt_diag_d(v))
    }

    fn hessian_r(&self, m: &[f64], u: &[Complex64], v: &[Complex64]) -> Result<SparseComplexMatrix> {
        self.check_model(m)?;
        self.check_state(u)?;
        self.check_state(v)?;
        Ok(SparseComplexMatrix::zeros(m.len(), m.len()))
    }

    fn regularization_operator(&self) -> SparseRealMatrix {
        difference_matrix(self.grid.n - 1, self.grid.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::{norm, sub};
    use crate::linalg::factor_general;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn three_node_stencil() {
        let model = Parabolic1D::new(Grid1D::new(3).unwrap(), 2.0);
        let a = model.assemble(&[1.0, 1.0]).unwrap().to_dense();
        let lap = [[4.0, -4.0, 0.0], [-4.0, 8.0, -4.0], [0.0, -4.0, 4.0]];
        let w = [0.5, 1.0, 0.5];
        for i in 0..3 {
            for j in 0..3 {
                let expect = c(lap[i][j], if i == j { 2.0 * w[i] } else { 0.0 });
                assert!((a[(i, j)] - expect).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_model() {
        let model = Parabolic1D::new(Grid1D::new(4).unwrap(), 1.0);
        assert!(model.assemble(&[1.0, 0.0, 1.0]).is_err());
        assert!(model.assemble(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let model = Parabolic1D::new(Grid1D::new(21).unwrap(), 10.0 * std::f64::consts::PI);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m: Vec<f64> = (0..20).map(|_| rng.random_range(0.5..2.0)).collect();
            let u: Vec<Complex64> = (0..21).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let dm: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let step = 1e-6 * m.iter().cloned().fold(0.0, f64::max);
            let mp: Vec<f64> = m.iter().zip(&dm).map(|(a, b)| a + step * b).collect();
            let mm: Vec<f64> = m.iter().zip(&dm).map(|(a, b)| a - step * b).collect();
            let dmc: Vec<Complex64> = dm.iter().map(|&x| c(x, 0.0)).collect();

            let fd = sub(&model.assemble(&mp).unwrap().mul_vec(&u), &model.assemble(&mm).unwrap().mul_vec(&u));
            let fd: Vec<Complex64> = fd.iter().map(|x| x / (2.0 * step)).collect();
            let gd = model.jacobian_g(&m, &u).unwrap().mul_vec(&dmc);
            assert!(norm(&sub(&fd, &gd)) <= 1e-6 * norm(&gd));

            let fd = sub(&model.assemble(&mp).unwrap().adjoint_mul_vec(&u), &model.assemble(&mm).unwrap().adjoint_mul_vec(&u));
            let fd: Vec<Complex64> = fd.iter().map(|x| x / (2.0 * step)).collect();
            let kd = model.jacobian_k(&m, &u).unwrap().mul_vec(&dmc);
            assert!(norm(&sub(&fd, &kd)) <= 1e-6 * norm(&kd));
        }
    }

    #[test]
    fn zero_state_and_zero_curvature() {
        let model = Parabolic1D::new(Grid1D::new(6).unwrap(), 3.0);
        let m = vec![1.5; 5];
        let z = vec![c(0.0, 0.0); 6];
        assert_eq!(model.jacobian_g(&m, &z).unwrap().max_abs(), 0.0);
        assert_eq!(model.jacobian_k(&m, &z).unwrap().max_abs(), 0.0);
        let u = vec![c(1.0, 2.0); 6];
        assert_eq!(model.hessian_r(&m, &u, &u).unwrap().nnz(), 0);
    }

    #[test]
    fn assembled_system_is_invertible() {
        let model = Parabolic1D::new(Grid1D::new(51).unwrap(), 10.0 * std::f64::consts::PI);
        let m: Vec<f64> = model.model_coordinates().iter().map(|x| 1.0 + (-10.0 * (x[0] - 0.5).powi(2)).exp()).collect();
        let a = model.assemble(&m).unwrap();
        let q: Vec<Complex64> = (0..51).map(|i| c((i as f64).sin(), 0.3)).collect();
        let x = factor_general(&a).unwrap().solve(&q);
        assert!(norm(&sub(&a.mul_vec(&x), &q)) <= 1e-10 * norm(&q));
    }
}
