//! Small dense real-symmetric and complex matrix kernels.
//!
//! Everything here is sized for the jets of a space-time grid: matrices of
//! dimension at most [`MAX_DIM`], stored inline so they can be copied freely
//! inside the solver loops.

mod complex;
mod random;
mod sym;

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub use complex::{complex_eigenvalues, CMatrix, ComplexSpectrum};
pub use random::{random_orthogonal, random_psd, random_spd, random_symmetric};
pub use sym::{cholesky, frame_factor, sym_eigenvalues};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;

const STORAGE: usize = MAX_DIM * MAX_DIM;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix dimension {0} outside 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("QR iteration did not converge after {iterations} sweeps (dim {dim})")]
    NoConvergence { iterations: usize, dim: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },
}

fn check_dim(dim: usize) {
    assert!(
        (1..=MAX_DIM).contains(&dim),
        "matrix dimension {dim} outside 1..={MAX_DIM}"
    );
}

/// Dense real symmetric matrix of dimension `1..=MAX_DIM`.
///
/// Every constructor symmetrizes, so `get(i, j) == get(j, i)` holds bitwise.
#[derive(Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: [f64; STORAGE],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self {
            dim,
            data: [0.0; STORAGE],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * MAX_DIM + i] = d;
        }
        m
    }

    /// Builds `(f(i, j) + f(j, i)) / 2`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = if i == j {
                    f(i, i)
                } else {
                    0.5 * (f(i, j) + f(j, i))
                };
                m.data[i * MAX_DIM + j] = v;
                m.data[j * MAX_DIM + i] = v;
            }
        }
        m
    }

    /// Symmetrizing constructor from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        for r in rows {
            assert_eq!(r.len(), dim, "rows must form a square matrix");
        }
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    /// Like [`SymMatrix::from_rows`] but rejects inputs whose asymmetry exceeds `tol`.
    pub fn try_from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
            return Err(LinalgError::Dimension(dim));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let diff = (rows[i][j] - rows[j][i]).abs();
                if diff > tol || !diff.is_finite() {
                    return Err(LinalgError::Asymmetric { i, j, diff });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// `diag(a, B)`: prepends a row and column that are zero except for `a`.
    pub fn bordered(a: f64, block: &SymMatrix) -> Self {
        let d = block.dim + 1;
        Self::from_fn(d, |i, j| match (i, j) {
            (0, 0) => a,
            (0, _) | (_, 0) => 0.0,
            _ => block.get(i - 1, j - 1),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j] = v;
        self.data[j * MAX_DIM + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn det(&self) -> f64 {
        Matrix::from_fn(self.dim, |i, j| self.get(i, j)).det()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * self.get(i, j);
            }
        }
        s.sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.dim, |i, j| s * self.get(i, j))
    }

    /// `self + s * I`.
    pub fn shift(&self, s: f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            m.data[i * MAX_DIM + i] += s;
        }
        m
    }

    /// `h * self * h^T`.
    pub fn congruence(&self, h: &Matrix) -> Self {
        assert_eq!(h.dim(), self.dim);
        let d = self.dim;
        let mut tmp = [0.0; STORAGE];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += h.get(i, k) * self.get(k, j);
                }
                tmp[i * MAX_DIM + j] = s;
            }
        }
        Self::from_fn(d, |i, j| {
            let mut s = 0.0;
            for k in 0..d {
                s += tmp[i * MAX_DIM + k] * h.get(j, k);
            }
            s
        })
    }

    /// Principal sub-block starting at `start` of size `len`.
    pub fn block(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.dim);
        Self::from_fn(len, |i, j| self.get(start + i, start + j))
    }

    /// The lower-right `(dim-1) x (dim-1)` block.
    pub fn trailing_block(&self) -> Self {
        self.block(1, self.dim - 1)
    }

    /// Off-diagonal part of row 0, i.e. entries `(0, 1..dim)`.
    pub fn first_row_tail(&self) -> Vec<f64> {
        (1..self.dim).map(|j| self.get(0, j)).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.get(i, j))
    }
}

impl std::ops::Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix::from_fn(self.dim, |i, j| self.get(i, j) + rhs.get(i, j))
    }
}

impl std::ops::Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix::from_fn(self.dim, |i, j| self.get(i, j) - rhs.get(i, j))
    }
}

impl std::ops::Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("SymMatrix").field("rows", &rows).finish()
    }
}

/// Dense real square matrix of dimension `1..=MAX_DIM` (frames, rotations).
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [f64; STORAGE],
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self {
            dim,
            data: [0.0; STORAGE],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * MAX_DIM + i] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * MAX_DIM + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * MAX_DIM + i] = d;
        }
        m
    }

    /// `diag(1, h)`.
    pub fn bordered_identity(h: &Matrix) -> Self {
        Self::from_fn(h.dim + 1, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ => h.get(i - 1, j - 1),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn mul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.get(i, k) * rhs.get(k, j)).sum()
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|k| self.get(i, k) * v[k]).sum())
            .collect()
    }

    /// Max-entry distance `|self - rhs|_max`.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max((self.get(i, j) - rhs.get(i, j)).abs());
            }
        }
        m
    }

    /// Determinant by partial-pivot LU.
    pub fn det(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data;
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * MAX_DIM + k].abs().total_cmp(&a[y * MAX_DIM + k].abs()))
                .unwrap_or(k);
            if a[p * MAX_DIM + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * MAX_DIM + j, p * MAX_DIM + j);
                }
                det = -det;
            }
            let piv = a[k * MAX_DIM + k];
            det *= piv;
            for i in (k + 1)..n {
                let l = a[i * MAX_DIM + k] / piv;
                for j in (k + 1)..n {
                    a[i * MAX_DIM + j] -= l * a[k * MAX_DIM + j];
                }
            }
        }
        det
    }

    /// Solves `self * x = b` by partial-pivot Gaussian elimination.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut a = self.data;
        let mut x = b.to_vec();
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * MAX_DIM + k].abs().total_cmp(&a[y * MAX_DIM + k].abs()))
                .unwrap_or(k);
            if a[p * MAX_DIM + k].abs() <= f64::EPSILON * scale * 1e-3 {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * MAX_DIM + j, p * MAX_DIM + j);
                }
                x.swap(k, p);
            }
            let piv = a[k * MAX_DIM + k];
            for i in (k + 1)..n {
                let l = a[i * MAX_DIM + k] / piv;
                for j in (k + 1)..n {
                    a[i * MAX_DIM + j] -= l * a[k * MAX_DIM + j];
                }
                x[i] -= l * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..n {
                s -= a[k * MAX_DIM + j] * x[j];
            }
            x[k] = s / a[k * MAX_DIM + k];
        }
        Ok(x)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("Matrix").field("rows", &rows).finish()
    }
}

/// Principal argument in `(-pi, pi]`; `atan2` returning exactly `-pi` is mapped to `+pi`.
#[inline]
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_symmetrize() {
        let m = SymMatrix::from_rows(&[&[1.0, 2.0], &[4.0, 3.0]]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn strict_constructor_rejects_asymmetry() {
        let rows = vec![vec![1.0, 2.0], vec![2.0 + 1e-9, 1.0]];
        assert!(matches!(
            SymMatrix::try_from_rows(&rows, 1e-12),
            Err(LinalgError::Asymmetric { i: 0, j: 1, .. })
        ));
        assert!(SymMatrix::try_from_rows(&rows, 1e-6).is_ok());
    }

    #[test]
    fn congruence_by_identity_is_noop() {
        let a = SymMatrix::from_rows(&[&[1.0, 0.5, 0.0], &[0.5, 2.0, -1.0], &[0.0, -1.0, 3.0]]);
        assert_eq!(a.congruence(&Matrix::identity(3)), a);
    }

    #[test]
    fn determinant_and_solve() {
        let m = Matrix::from_fn(3, |i, j| [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]][i][j]);
        assert!((m.det() - 18.0).abs() < 1e-12);
        let x = m.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = m.mul_vec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-12);
        }
        assert!(Matrix::zeros(2).solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn arg_branch_excludes_minus_pi() {
        let z = Complex64::new(-1.0, -0.0);
        assert_eq!(principal_arg(z), std::f64::consts::PI);
        assert_eq!(principal_arg(Complex64::new(0.0, 1.0)), std::f64::consts::FRAC_PI_2);
    }
}
