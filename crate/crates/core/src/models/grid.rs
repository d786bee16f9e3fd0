use crate::linalg::SparseRealMatrix;
use crate::{Error, Result};

/// Relative slack when deciding whether a location lies inside the domain.
const DOMAIN_SLACK: f64 = 1e-12;

/// Uniform node grid on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("1D grid needs at least 3 nodes, got {n}")));
        }
        Ok(Self { n, h: 1.0 / (n - 1) as f64 })
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn cell_centre(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn cell_centres(&self) -> Vec<f64> {
        (0..self.n - 1).map(|j| self.cell_centre(j)).collect()
    }

    /// Linear interpolation stencil of `x` over the nodes.
    pub fn interpolation_row(&self, x: f64) -> Result<Vec<(usize, f64)>> {
        let (i, t) = locate(x, 0.0, self.h, self.n).ok_or_else(|| Error::OutOfDomain(vec![x]))?;
        Ok(stencil_1d(i, t))
    }
}

/// Uniform node grid on a rectangle. Nodes are numbered `i1 + n1 * i2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub n1: usize,
    pub n2: usize,
    /// `[x1_min, x1_max, x2_min, x2_max]`.
    pub extents: [f64; 4],
    pub h1: f64,
    pub h2: f64,
}

impl Grid2D {
    pub fn new(n1: usize, n2: usize, extents: [f64; 4]) -> Result<Self> {
        if n1 < 3 || n2 < 3 {
            return Err(Error::Config(format!("2D grid needs at least 3x3 nodes, got {n1}x{n2}")));
        }
        let (l1, l2) = (extents[1] - extents[0], extents[3] - extents[2]);
        if !(l1 > 0.0 && l2 > 0.0) {
            return Err(Error::Config(format!("degenerate extents {extents:?}")));
        }
        Ok(Self { n1, n2, extents, h1: l1 / (n1 - 1) as f64, h2: l2 / (n2 - 1) as f64 })
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 + self.n1 * i2
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i1, i2) = (k % self.n1, k / self.n1);
        (self.extents[0] + i1 as f64 * self.h1, self.extents[2] + i2 as f64 * self.h2)
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let (i1, i2) = (k % self.n1, k / self.n1);
        i1 == 0 || i1 == self.n1 - 1 || i2 == 0 || i2 == self.n2 - 1
    }

    /// Spacing normal to the boundary at node `k`; corners use `h1`.
    /// `None` for interior nodes.
    pub fn boundary_spacing(&self, k: usize) -> Option<f64> {
        let (i1, i2) = (k % self.n1, k / self.n1);
        if i1 == 0 || i1 == self.n1 - 1 {
            Some(self.h1)
        } else if i2 == 0 || i2 == self.n2 - 1 {
            Some(self.h2)
        } else {
            None
        }
    }

    /// Bilinear interpolation stencil of `(x1, x2)`.
    pub fn interpolation_row(&self, x1: f64, x2: f64) -> Result<Vec<(usize, f64)>> {
        let out = || Error::OutOfDomain(vec![x1, x2]);
        let (i, s) = locate(x1, self.extents[0], self.h1, self.n1).ok_or_else(out)?;
        let (j, t) = locate(x2, self.extents[2], self.h2, self.n2).ok_or_else(out)?;
        let mut row = Vec::with_capacity(4);
        for (dj, wj) in stencil_1d(j, t) {
            for &(di, wi) in &stencil_1d(i, s) {
                row.push((self.index(di, dj), wi * wj));
            }
        }
        Ok(row)
    }
}

/// Cell index and local coordinate in `[0, 1]`, or `None` outside.
fn locate(x: f64, x0: f64, h: f64, n: usize) -> Option<(usize, f64)> {
    let t = (x - x0) / h;
    let last = (n - 1) as f64;
    if !t.is_finite() || t < -DOMAIN_SLACK * last || t > last * (1.0 + DOMAIN_SLACK) {
        return None;
    }
    // Snap round-off so on-node locations give unit rows.
    let t = if (t - t.round()).abs() < 1e-10 { t.round() } else { t };
    let t = t.clamp(0.0, last);
    let i = (t.floor() as usize).min(n - 2);
    Some((i, t - i as f64))
}

/// Nonzero weights only, so an on-node location gives a unit row.
fn stencil_1d(i: usize, t: f64) -> Vec<(usize, f64)> {
    [(i, 1.0 - t), (i + 1, t)].into_iter().filter(|&(_, w)| w != 0.0).collect()
}

/// `(n−1)×n` forward-difference matrix scaled by `1/h`.
pub fn difference_matrix(n: usize, h: f64) -> SparseRealMatrix {
    let trips = (0..n - 1).flat_map(|i| [(i, i, -1.0 / h), (i, i + 1, 1.0 / h)]);
    SparseRealMatrix::from_triplets(n - 1, n, trips).expect("valid stencil")
}

/// Stacked gradient `[I₂⊗D₁; D₂⊗I₁]` on a 2D node grid.
pub fn gradient_2d(grid: &Grid2D) -> SparseRealMatrix {
    let (n1, n2) = (grid.n1, grid.n2);
    let mut trips = Vec::with_capacity(4 * n1 * n2);
    let mut row = 0;
    for i2 in 0..n2 {
        for i1 in 0..n1 - 1 {
            trips.push((row, grid.index(i1, i2), -1.0 / grid.h1));
            trips.push((row, grid.index(i1 + 1, i2), 1.0 / grid.h1));
            row += 1;
        }
    }
    for i2 in 0..n2 - 1 {
        for i1 in 0..n1 {
            trips.push((row, grid.index(i1, i2), -1.0 / grid.h2));
            trips.push((row, grid.index(i1, i2 + 1), 1.0 / grid.h2));
            row += 1;
        }
    }
    SparseRealMatrix::from_triplets(row, n1 * n2, trips).expect("valid stencil")
}
