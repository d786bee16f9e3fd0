//! Discretized forward operators `A(m)`, their parameter Jacobians, and
//! receiver/source operators.
//!
//! Jacobian conventions, with `ᴴ` the conjugate transpose and `m` real:
//!
//! - `G(m, u) = ∂(A(m)u)/∂m`, state × model.
//! - `K(m, v) = ∂(A(m)ᴴv)/∂m`, state × model.
//! - `R(m, u, v) = ∂(G(m, u)ᴴv)/∂m`, model × model.

mod grid;
mod helmholtz;
mod parabolic;

pub use grid::{difference_matrix, gradient_2d, Grid1D, Grid2D};
pub use helmholtz::Helmholtz;
pub use parabolic::Parabolic1D;

use num_complex::Complex64;

use crate::linalg::{SparseComplexMatrix, SparseRealMatrix};
use crate::{check_len, Error, Result};

/// Either grid, for location-based operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::One(_) => 1,
            Grid::Two(_) => 2,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Grid::One(g) => g.n,
            Grid::Two(g) => g.len(),
        }
    }

    /// Length (1D) or area (2D) of one grid cell.
    pub fn cell_measure(&self) -> f64 {
        match self {
            Grid::One(g) => g.h,
            Grid::Two(g) => g.h1 * g.h2,
        }
    }

    pub fn interpolation_row(&self, loc: &[f64]) -> Result<Vec<(usize, f64)>> {
        match (self, loc) {
            (Grid::One(g), [x]) => g.interpolation_row(*x),
            (Grid::Two(g), [x1, x2]) => g.interpolation_row(*x1, *x2),
            _ => Err(Error::Dimension { what: "location", got: loc.len(), expected: self.dim() }),
        }
    }
}

pub trait ForwardModel: Send + Sync + std::fmt::Debug {
    fn grid(&self) -> Grid;
    fn omega(&self) -> f64;
    fn state_dim(&self) -> usize;
    fn model_dim(&self) -> usize;

    /// Physical coordinates of each model degree of freedom.
    fn model_coordinates(&self) -> Vec<Vec<f64>>;

    fn assemble(&self, m: &[f64]) -> Result<SparseComplexMatrix>;
    fn jacobian_g(&self, m: &[f64], u: &[Complex64]) -> Result<SparseComplexMatrix>;
    fn jacobian_k(&self, m: &[f64], v: &[Complex64]) -> Result<SparseComplexMatrix>;
    fn hessian_r(&self, m: &[f64], u: &[Complex64], v: &[Complex64]) -> Result<SparseComplexMatrix>;

    /// Difference operator `D` of the Tikhonov term `α/2 ‖Dm‖²`.
    fn regularization_operator(&self) -> SparseRealMatrix;

    fn check_model(&self, m: &[f64]) -> Result<()> {
        check_len("model", m.len(), self.model_dim())?;
        match m.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            Some(i) => Err(Error::InvalidModel(format!("entry {i} is {} (must be finite and positive)", m[i]))),
            None => Ok(()),
        }
    }

    fn check_state(&self, u: &[Complex64]) -> Result<()> {
        check_len("state", u.len(), self.state_dim())
    }
}

/// Receiver operator: one interpolation row per location.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOperator {
    pub matrix: SparseComplexMatrix,
    pub locations: Vec<Vec<f64>>,
}

pub fn sampling_operator(grid: &Grid, locations: &[Vec<f64>]) -> Result<SamplingOperator> {
    for (i, a) in locations.iter().enumerate() {
        if locations[..i].contains(a) {
            return Err(Error::Config(format!("duplicate receiver location {a:?}")));
        }
    }
    let mut trips = Vec::new();
    for (r, loc) in locations.iter().enumerate() {
        for (c, w) in grid.interpolation_row(loc)? {
            trips.push((r, c, Complex64::new(w, 0.0)));
        }
    }
    let matrix = SparseComplexMatrix::from_triplets(locations.len(), grid.node_count(), trips)?;
    Ok(SamplingOperator { matrix, locations: locations.to_vec() })
}

/// Point source by adjoint interpolation: `q = rowᵀ · amplitude`.
pub fn source_vector(grid: &Grid, location: &[f64], amplitude: Complex64) -> Result<Vec<Complex64>> {
    let mut q = vec![Complex64::new(0.0, 0.0); grid.node_count()];
    for (c, w) in grid.interpolation_row(location)? {
        q[c] += amplitude * w;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn on_node_sampling_is_unit_row() {
        let g = Grid::Two(Grid2D::new(5, 5, [0.0, 1.0, 0.0, 1.0]).unwrap());
        let p = sampling_operator(&g, &[vec![0.25, 0.5]]).unwrap();
        let row: Vec<_> = p.matrix.row(0).collect();
        assert_eq!(row, vec![(11, Complex64::new(1.0, 0.0))]);
    }

    #[test]
    fn midpoint_source_1d() {
        let g = Grid::One(Grid1D::new(5).unwrap());
        let q = source_vector(&g, &[0.375], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(q[1], Complex64::new(0.5, 0.0));
        assert_eq!(q[2], Complex64::new(0.5, 0.0));
        assert_eq!(q.iter().filter(|v| v.norm() > 0.0).count(), 2);
    }

    #[test]
    fn bilinear_rows_reproduce_bilinear_functions() {
        let grid = Grid2D::new(7, 5, [0.0, 3.0, -1.0, 1.0]).unwrap();
        let g = Grid::Two(grid);
        let f = |x: f64, y: f64| 2.0 + 0.5 * x - 3.0 * y + 0.7 * x * y;
        let nodal: Vec<Complex64> = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                Complex64::new(f(x, y), 0.0)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let locs: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random_range(0.0..3.0), rng.random_range(-1.0..1.0)]).collect();
        let p = sampling_operator(&g, &locs).unwrap();
        let vals = p.matrix.mul_vec(&nodal);
        for (i, loc) in locs.iter().enumerate() {
            let row: Vec<_> = p.matrix.row(i).collect();
            assert!(row.len() <= 4);
            assert!(row.iter().all(|(_, w)| w.re >= 0.0 && w.im == 0.0));
            assert!((row.iter().map(|(_, w)| w.re).sum::<f64>() - 1.0).abs() < 1e-14);
            // bilinear interpolation is exact for functions bilinear on each cell
            assert!((vals[i].re - f(loc[0], loc[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_source_and_receiver() {
        let g = Grid::Two(Grid2D::new(6, 6, [0.0, 1.0, 0.0, 1.0]).unwrap());
        let loc = vec![0.33, 0.71];
        let p = sampling_operator(&g, std::slice::from_ref(&loc)).unwrap();
        let q = source_vector(&g, &loc, Complex64::new(1.0, 0.0)).unwrap();
        let w2: f64 = g.interpolation_row(&loc).unwrap().iter().map(|(_, w)| w * w).sum();
        assert!((p.matrix.mul_vec(&q)[0].re - w2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_locations() {
        let g = Grid::One(Grid1D::new(5).unwrap());
        assert!(matches!(sampling_operator(&g, &[vec![1.5]]), Err(Error::OutOfDomain(_))));
        assert!(sampling_operator(&g, &[vec![0.5], vec![0.5]]).is_err());
        assert!(source_vector(&g, &[0.1, 0.2], Complex64::new(1.0, 0.0)).is_err());
    }
}
