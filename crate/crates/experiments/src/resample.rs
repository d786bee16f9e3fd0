//! Moving model vectors between regular grids.

use penopt::models::{ForwardModel, Grid};

use crate::error::{ExpError, Result};

/// Regular grid of model values, first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrid {
    pub dims: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl ModelGrid {
    pub fn new(dims: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 || origin.len() != dims.len() || spacing.len() != dims.len() {
            return Err(ExpError::Format(format!("grid needs 1 or 2 matching dims/origin/spacing, got {dims:?} {origin:?} {spacing:?}")));
        }
        if dims.iter().any(|&n| n < 2) || spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(ExpError::Format(format!("degenerate grid dims {dims:?} spacing {spacing:?}")));
        }
        Ok(Self { dims, origin, spacing })
    }

    /// Grid on which `model` stores its parameters: cell centres for the
    /// parabolic model, nodes otherwise.
    pub fn of_model(model: &dyn ForwardModel) -> Self {
        match model.grid() {
            Grid::One(g) if model.model_dim() == g.n - 1 => Self { dims: vec![g.n - 1], origin: vec![0.5 * g.h], spacing: vec![g.h] },
            Grid::One(g) => Self { dims: vec![g.n], origin: vec![0.0], spacing: vec![g.h] },
            Grid::Two(g) => Self { dims: vec![g.n1, g.n2], origin: vec![g.extents[0], g.extents[2]], spacing: vec![g.h1, g.h2] },
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        match self.dims[..] {
            [n] => (0..n).map(|i| vec![self.coord(0, i)]).collect(),
            [n1, n2] => (0..n1 * n2).map(|k| vec![self.coord(0, k % n1), self.coord(1, k / n1)]).collect(),
            _ => unreachable!("validated dims"),
        }
    }

    /// Cell index and fraction along `axis`, clamped to the grid.
    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let n = self.dims[axis];
        let s = ((x - self.origin[axis]) / self.spacing[axis]).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    /// Linear (1D) or bilinear (2D) interpolation, constant extension outside.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        match self.dims[..] {
            [_] => {
                let (i, t) = self.locate(0, x[0]);
                (1.0 - t) * values[i] + t * values[i + 1]
            }
            [n1, _] => {
                let (i, s) = self.locate(0, x[0]);
                let (j, t) = self.locate(1, x[1]);
                let v = |a: usize, b: usize| values[a + n1 * b];
                (1.0 - s) * (1.0 - t) * v(i, j) + s * (1.0 - t) * v(i + 1, j) + (1.0 - s) * t * v(i, j + 1) + s * t * v(i + 1, j + 1)
            }
            _ => unreachable!("validated dims"),
        }
    }
}

/// Values of `m` (on `from`) interpolated at the points of `to`.
pub fn resample(m: &[f64], from: &ModelGrid, to: &ModelGrid) -> Result<Vec<f64>> {
    if m.len() != from.len() {
        return Err(ExpError::Format(format!("model has {} values, grid has {}", m.len(), from.len())));
    }
    if from.dim() != to.dim() {
        return Err(ExpError::Format(format!("cannot resample {}D to {}D", from.dim(), to.dim())));
    }
    if from == to {
        return Ok(m.to_vec());
    }
    Ok(to.points().iter().map(|x| from.interpolate(m, x)).collect())
}

/// Fine-to-coarse transfer.
pub fn restrict_model(m: &[f64], fine: &ModelGrid, coarse: &ModelGrid) -> Result<Vec<f64>> {
    resample(m, fine, coarse)
}

/// Coarse-to-fine transfer.
pub fn prolong_model(m: &[f64], coarse: &ModelGrid, fine: &ModelGrid) -> Result<Vec<f64>> {
    resample(m, coarse, fine)
}

fn gaussian_weights(sigma: f64, h: f64) -> Vec<f64> {
    let r = (3.0 * sigma / h).ceil() as usize;
    (0..=2 * r).map(|i| (-0.5 * ((i as f64 - r as f64) * h / sigma).powi(2)).exp()).collect()
}

fn smooth_axis(values: &[f64], grid: &ModelGrid, axis: usize, sigma: f64) -> Vec<f64> {
    let w = gaussian_weights(sigma, grid.spacing[axis]);
    let r = (w.len() / 2) as isize;
    let n1 = grid.dims[0];
    let n = grid.dims[axis] as isize;
    (0..values.len())
        .map(|k| {
            let (i, j) = (k % n1, k / n1);
            let pos = if axis == 0 { i } else { j } as isize;
            let (mut acc, mut tot) = (0.0, 0.0);
            for (o, wt) in w.iter().enumerate() {
                let p = pos + o as isize - r;
                if (0..n).contains(&p) {
                    let idx = if axis == 0 { p as usize + n1 * j } else { i + n1 * p as usize };
                    acc += wt * values[idx];
                    tot += wt;
                }
            }
            acc / tot
        })
        .collect()
}

/// Separable Gaussian smoothing of width `sigma` (domain units), with the
/// kernel renormalized at the edges so constants are preserved.
pub fn smooth(values: &[f64], grid: &ModelGrid, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    (0..grid.dim()).fold(values.to_vec(), |v, axis| smooth_axis(&v, grid, axis, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, a: f64, b: f64) -> ModelGrid {
        ModelGrid::new(vec![n], vec![a], vec![(b - a) / (n - 1) as f64]).unwrap()
    }

    #[test]
    fn constants_and_ramps_survive() {
        let (f, c) = (line(201, 0.0, 1.0), line(101, 0.0, 1.0));
        let ramp: Vec<f64> = f.points().iter().map(|x| 2.0 - 3.0 * x[0]).collect();
        let r = restrict_model(&ramp, &f, &c).unwrap();
        for (x, v) in c.points().iter().zip(&r) {
            assert!((v - (2.0 - 3.0 * x[0])).abs() < 1e-13);
        }
        let ones = vec![0.7; 101];
        let back = prolong_model(&restrict_model(&prolong_model(&ones, &c, &f).unwrap(), &f, &c).unwrap(), &c, &f).unwrap();
        assert!(back.iter().all(|v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn model_grid_of_parabolic_is_cell_centred() {
        use penopt::models::{Grid1D, Parabolic1D};
        let m = Parabolic1D::new(Grid1D::new(11).unwrap(), 1.0);
        let g = ModelGrid::of_model(&m);
        assert_eq!(g.len(), 10);
        assert!((g.points()[0][0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn smoothing_preserves_constants_and_flattens() {
        let g = ModelGrid::new(vec![20, 30], vec![0.0, 0.0], vec![0.1, 0.1]).unwrap();
        let c = vec![3.0; g.len()];
        assert!(smooth(&c, &g, 0.5).iter().all(|v| (v - 3.0).abs() < 1e-14));
        let spike: Vec<f64> = (0..g.len()).map(|k| if k == 305 { 1.0 } else { 0.0 }).collect();
        let s = smooth(&spike, &g, 0.3);
        assert!(s[305] < 0.2 && s[305] > 0.0);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(ModelGrid::new(vec![1], vec![0.0], vec![1.0]).is_err());
        assert!(ModelGrid::new(vec![3], vec![0.0], vec![0.0]).is_err());
        let g = line(5, 0.0, 1.0);
        assert!(resample(&[1.0; 4], &g, &g).is_err());
    }
}
