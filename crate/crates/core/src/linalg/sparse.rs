use nalgebra::DMatrix;
use num_complex::Complex64;

use super::scalar::Scalar;
use super::LinalgError;

/// Compressed sparse row matrix.
///
/// Column indices within a row are strictly increasing, so there are no
/// duplicate `(row, col)` pairs. Stored entries are structural: an explicit
/// zero produced during assembly stays in the pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

pub type SparseComplexMatrix = SparseMatrix<Complex64>;
pub type SparseRealMatrix = SparseMatrix<f64>;

impl<T: Scalar> SparseMatrix<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut trips: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &trips {
            if r >= rows || c >= cols {
                return Err(LinalgError::IndexOutOfBounds { row: r, col: c, rows, cols });
            }
        }
        trips.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<T> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self { rows, cols, indptr, indices, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// `y = M x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "mul_vec: dimension mismatch");
        (0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y = Mᴴ x` (conjugate transpose)
    pub fn adjoint_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows, "adjoint_mul_vec: dimension mismatch");
        let mut y = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v.conj() * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v)))
            .expect("transpose stays in bounds")
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
            .expect("adjoint stays in bounds")
    }

    pub fn scale(&self, a: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = a * *v);
        out
    }

    /// `self + a * other`
    pub fn add_scaled(&self, a: T, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "add_scaled: shape mismatch");
        Self::from_triplets(
            self.rows,
            self.cols,
            self.triplets().chain(other.triplets().map(|(i, j, v)| (i, j, a * v))),
        )
        .expect("sum stays in bounds")
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut trips = Vec::new();
        let mut acc = vec![T::zero(); other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = T::zero();
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                trips.push((i, j, acc[j]));
            }
        }
        Self::from_triplets(self.rows, other.cols, trips).expect("product stays in bounds")
    }

    /// `selfᴴ * self`
    pub fn gram(&self) -> Self {
        self.adjoint().matmul(self)
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&Self]) -> Self {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut trips = Vec::new();
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack: column mismatch");
            trips.extend(b.triplets().map(|(i, j, v)| (i + offset, j, v)));
            offset += b.rows;
        }
        Self::from_triplets(offset, cols, trips).expect("stack stays in bounds")
    }

    /// Lower and upper bandwidth of the stored pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for (i, j, _) in self.triplets() {
            if i > j {
                lo = lo.max(i - j);
            } else {
                up = up.max(j - i);
            }
        }
        (lo, up)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Max-abs entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.triplets()
            .all(|(i, j, v)| (v - self.get(j, i).conj()).abs() <= rel_tol * scale)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Sparsity pattern as `(row, col)` pairs.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.triplets().map(|(i, j, _)| (i, j)).collect()
    }
}

impl<T: Scalar + nalgebra::Scalar> SparseMatrix<T> {
    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::from_element(self.rows, self.cols, T::zero());
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

impl SparseMatrix<f64> {
    pub fn to_complex(&self) -> SparseComplexMatrix {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl SparseComplexMatrix {
    pub fn real_part(&self) -> SparseRealMatrix {
        self.map(|v| v.re)
    }

    pub fn imag_part(&self) -> SparseRealMatrix {
        self.map(|v| v.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::dot;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let e = SparseMatrix::<f64>::from_triplets(2, 2, vec![(2, 0, 1.0)]);
        assert!(matches!(e, Err(LinalgError::IndexOutOfBounds { .. })));
    }

    #[test]
    fn adjoint_is_conjugate_transpose() {
        let m = SparseMatrix::from_triplets(2, 3, vec![(0, 2, c(1.0, 2.0)), (1, 0, c(0.0, -1.0))]).unwrap();
        let a = m.adjoint();
        assert_eq!(a.shape(), (3, 2));
        assert_eq!(a.get(2, 0), c(1.0, -2.0));
        assert_eq!(a.get(0, 1), c(0.0, 1.0));
        let x = vec![c(1.0, 1.0), c(-2.0, 0.5), c(0.3, 0.0)];
        let y = vec![c(0.7, -1.0), c(2.0, 3.0)];
        let lhs = dot(&m.mul_vec(&x), &y);
        let rhs = dot(&x, &m.adjoint_mul_vec(&y));
        assert!((lhs - rhs).norm() < 1e-14);
        assert_eq!(a.mul_vec(&y), m.adjoint_mul_vec(&y));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = SparseMatrix::from_triplets(3, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 0, -1.0), (2, 1, 3.0)]).unwrap();
        let b = SparseMatrix::from_triplets(2, 3, vec![(0, 2, 4.0), (1, 0, 1.0), (1, 1, -2.0)]).unwrap();
        let p = a.matmul(&b).to_dense();
        let q = a.to_dense() * b.to_dense();
        assert!((p - q).abs().max() < 1e-15);
    }

    #[test]
    fn bandwidth_of_tridiagonal() {
        let t = SparseMatrix::from_triplets(4, 4, (0..4).flat_map(|i| {
            let mut v = vec![(i, i, 2.0)];
            if i > 0 {
                v.push((i, i - 1, -1.0));
            }
            if i < 3 {
                v.push((i, i + 1, -1.0));
            }
            v
        }))
        .unwrap();
        assert_eq!(t.bandwidth(), (1, 1));
        assert!(t.is_hermitian(0.0));
        assert_eq!(t.gram().bandwidth(), (2, 2));
    }
}
