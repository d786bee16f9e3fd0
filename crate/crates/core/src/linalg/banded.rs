//! Banded direct solvers.
//!
//! Every built-in operator uses natural grid ordering, so the bandwidth is
//! bounded by the fastest grid axis and a dense band factorization is the
//! cheapest exact method at desk scale.

use super::scalar::Scalar;
use super::sparse::SparseMatrix;
use super::LinalgError;

/// Cholesky factor `M = L Lᴴ` of a banded Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianFactor<T> {
    n: usize,
    kd: usize,
    // column-major lower band: entry (i, j), j <= i <= j + kd, at j * (kd + 1) + (i - j)
    band: Vec<T>,
}

/// Factor a Hermitian positive definite matrix.
///
/// Only the lower triangle is read after the Hermitian check. A non-positive
/// pivot reports [`LinalgError::Breakdown`] with the offending column.
pub fn factor_hermitian<T: Scalar>(m: &SparseMatrix<T>) -> Result<HermitianFactor<T>, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::NotSquare { rows: n, cols: m.ncols() });
    }
    if !m.is_hermitian(1e-12) {
        return Err(LinalgError::NotHermitian);
    }
    let (kd, _) = m.bandwidth();
    let w = kd + 1;
    let mut band = vec![T::zero(); n * w];
    for (i, j, v) in m.triplets() {
        if i >= j {
            band[j * w + (i - j)] = v;
        }
    }
    let at = |i: usize, j: usize| j * w + (i - j);
    for j in 0..n {
        let k0 = j.saturating_sub(kd);
        let mut d = band[at(j, j)].re();
        for k in k0..j {
            d -= band[at(j, k)].abs_sq();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::Breakdown { index: j });
        }
        let ljj = d.sqrt();
        band[at(j, j)] = T::from_real(ljj);
        let inv = T::from_real(1.0 / ljj);
        for i in j + 1..(j + kd + 1).min(n) {
            let mut s = band[at(i, j)];
            for k in i.saturating_sub(kd)..j {
                s -= band[at(i, k)] * band[at(j, k)].conj();
            }
            band[at(i, j)] = s * inv;
        }
    }
    Ok(HermitianFactor { n, kd, band })
}

impl<T: Scalar> HermitianFactor<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "solve: dimension mismatch");
        let (n, kd, w) = (self.n, self.kd, self.kd + 1);
        let at = |i: usize, j: usize| j * w + (i - j);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(kd)..i {
                s -= self.band[at(i, k)] * y[k];
            }
            y[i] = s / self.band[at(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + kd + 1).min(n) {
                s -= self.band[at(k, i)].conj() * y[k];
            }
            y[i] = s / self.band[at(i, i)].conj();
        }
        y
    }

    /// Solve with one step of iterative refinement against `m`.
    pub fn solve_refined(&self, m: &SparseMatrix<T>, b: &[T]) -> Vec<T> {
        let mut x = self.solve(b);
        let mx = m.mul_vec(&x);
        let r: Vec<T> = b.iter().zip(&mx).map(|(a, c)| *a - *c).collect();
        let dx = self.solve(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
        x
    }
}

/// LU factorization with partial pivoting of a general banded matrix,
/// stored LINPACK style (row interchanges applied only to trailing columns).
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    kv: usize,
    ld: usize,
    ab: Vec<T>,
    piv: Vec<usize>,
}

pub fn factor_general<T: Scalar>(m: &SparseMatrix<T>) -> Result<BandedLu<T>, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::NotSquare { rows: n, cols: m.ncols() });
    }
    let (kl, ku) = m.bandwidth();
    let kv = kl + ku;
    let ld = 2 * kl + ku + 1;
    let mut ab = vec![T::zero(); n * ld];
    let at = |i: usize, j: usize| j * ld + kv + i - j;
    for (i, j, v) in m.triplets() {
        ab[at(i, j)] = v;
    }
    let mut piv = vec![0usize; n];
    for j in 0..n {
        let last = (j + kl).min(n - 1);
        let mut p = j;
        let mut best = ab[at(j, j)].abs();
        for i in j + 1..=last {
            let a = ab[at(i, j)].abs();
            if a > best {
                best = a;
                p = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(LinalgError::Singular { index: j });
        }
        piv[j] = p;
        let cend = (j + kv).min(n - 1);
        if p != j {
            for c in j..=cend {
                ab.swap(at(j, c), at(p, c));
            }
        }
        let pivot = ab[at(j, j)];
        for i in j + 1..=last {
            let l = ab[at(i, j)] / pivot;
            ab[at(i, j)] = l;
            if l == T::zero() {
                continue;
            }
            for c in j + 1..=cend {
                let u = ab[at(j, c)];
                ab[at(i, c)] -= l * u;
            }
        }
    }
    Ok(BandedLu { n, kl, kv, ld, ab, piv })
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.ab[j * self.ld + self.kv + i - j]
    }

    /// Solve `M x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "solve: dimension mismatch");
        let n = self.n;
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.piv[j]);
            let xj = x[j];
            for i in j + 1..=(j + self.kl).min(n - 1) {
                x[i] -= self.at(i, j) * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] = x[j] / self.at(j, j);
            let xj = x[j];
            for i in j.saturating_sub(self.kv)..j {
                x[i] -= self.at(i, j) * xj;
            }
        }
        x
    }

    /// Solve `Mᴴ x = b`.
    pub fn solve_adjoint(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "solve_adjoint: dimension mismatch");
        let n = self.n;
        let mut z = b.to_vec();
        for j in 0..n {
            let mut s = z[j];
            for i in j.saturating_sub(self.kv)..j {
                s -= self.at(i, j).conj() * z[i];
            }
            z[j] = s / self.at(j, j).conj();
        }
        for j in (0..n).rev() {
            let mut s = z[j];
            for i in j + 1..=(j + self.kl).min(n - 1) {
                s -= self.at(i, j).conj() * z[i];
            }
            z[j] = s;
            z.swap(j, self.piv[j]);
        }
        z
    }
}
