use super::scalar::Scalar;
use super::sparse::SparseMatrix;

/// Matrix-free linear map with its conjugate transpose.
pub trait LinearOperator<T: Scalar>: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;
    fn apply_adjoint(&self, y: &[T]) -> Vec<T>;

    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
}

impl<T: Scalar> LinearOperator<T> for SparseMatrix<T> {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, y: &[T]) -> Vec<T> {
        self.adjoint_mul_vec(y)
    }
}

impl<T: Scalar, O: LinearOperator<T> + ?Sized> LinearOperator<T> for &O {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &[T]) -> Vec<T> {
        (**self).apply_adjoint(y)
    }
}

/// Operator built from a pair of closures.
pub struct FnOperator<F, G> {
    rows: usize,
    cols: usize,
    forward: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G> {
    pub fn new(rows: usize, cols: usize, forward: F, adjoint: G) -> Self {
        Self { rows, cols, forward, adjoint }
    }
}

impl<T, F, G> LinearOperator<T> for FnOperator<F, G>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T> + Sync,
    G: Fn(&[T]) -> Vec<T> + Sync,
{
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        (self.forward)(x)
    }
    fn apply_adjoint(&self, y: &[T]) -> Vec<T> {
        (self.adjoint)(y)
    }
}

/// Self-adjoint operator from a single closure.
pub fn symmetric_operator<T: Scalar, F>(n: usize, f: F) -> impl LinearOperator<T>
where
    F: Fn(&[T]) -> Vec<T> + Sync,
{
    SelfAdjoint { n, f }
}

struct SelfAdjoint<F> {
    n: usize,
    f: F,
}

impl<T: Scalar, F: Fn(&[T]) -> Vec<T> + Sync> LinearOperator<T> for SelfAdjoint<F> {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        (self.f)(x)
    }
    fn apply_adjoint(&self, y: &[T]) -> Vec<T> {
        (self.f)(y)
    }
}

/// `[top; weight * bottom]`, used for the data-augmented system.
pub struct Stacked<'a, T: Scalar> {
    pub top: &'a dyn LinearOperator<T>,
    pub bottom: &'a dyn LinearOperator<T>,
    pub weight: T,
}

impl<T: Scalar> LinearOperator<T> for Stacked<'_, T> {
    fn nrows(&self) -> usize {
        self.top.nrows() + self.bottom.nrows()
    }
    fn ncols(&self) -> usize {
        self.top.ncols()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = self.top.apply(x);
        y.extend(self.bottom.apply(x).into_iter().map(|v| self.weight * v));
        y
    }
    fn apply_adjoint(&self, y: &[T]) -> Vec<T> {
        let k = self.top.nrows();
        let mut x = self.top.apply_adjoint(&y[..k]);
        let w = self.weight.conj();
        for (xi, b) in x.iter_mut().zip(self.bottom.apply_adjoint(&y[k..])) {
            *xi += w * b;
        }
        x
    }
}

/// Materializes an operator column by column.
pub fn to_dense<T: Scalar + nalgebra::Scalar>(op: &dyn LinearOperator<T>) -> nalgebra::DMatrix<T> {
    let (m, n) = op.shape();
    let mut out = nalgebra::DMatrix::from_element(m, n, T::zero());
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = op.apply(&e);
        for i in 0..m {
            out[(i, j)] = col[i];
        }
        e[j] = T::zero();
    }
    out
}
