use std::fmt;

use num_complex::Complex64;

use super::{check_dim, LinalgError, MAX_DIM};

const STORAGE: usize = MAX_DIM * MAX_DIM;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Sweeps allowed per eigenvalue before the QR iteration reports failure.
const SWEEPS_PER_EIGENVALUE: usize = 40;

/// Dense complex square matrix of dimension `1..=MAX_DIM`.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [Complex64; STORAGE],
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self {
            dim,
            data: [ZERO; STORAGE],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * MAX_DIM + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * MAX_DIM + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * MAX_DIM + i] = d;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j] = v;
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j).conj())
    }

    pub fn mul(&self, rhs: &CMatrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.get(i, k) * rhs.get(k, j)).sum()
        })
    }

    fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    /// Determinant by partial-pivot LU.
    pub fn det(&self) -> Complex64 {
        let n = self.dim;
        let mut a = self.data;
        let mut det = ONE;
        for k in 0..n {
            let p = pivot_row(&a, k, n);
            if a[p * MAX_DIM + k] == ZERO {
                return ZERO;
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
                    let t = a[k * MAX_DIM + j];
                    a[i * MAX_DIM + j] -= l * t;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMatrix, LinalgError> {
        let n = self.dim;
        let mut a = self.data;
        let mut inv = CMatrix::identity(n).data;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = pivot_row(&a, k, n);
            if a[p * MAX_DIM + k].norm() <= f64::EPSILON * 1e-4 * scale {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * MAX_DIM + j, p * MAX_DIM + j);
                    inv.swap(k * MAX_DIM + j, p * MAX_DIM + j);
                }
            }
            let piv_inv = ONE / a[k * MAX_DIM + k];
            for j in 0..n {
                a[k * MAX_DIM + j] *= piv_inv;
                inv[k * MAX_DIM + j] *= piv_inv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let l = a[i * MAX_DIM + k];
                if l == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ak, ik) = (a[k * MAX_DIM + j], inv[k * MAX_DIM + j]);
                    a[i * MAX_DIM + j] -= l * ak;
                    inv[i * MAX_DIM + j] -= l * ik;
                }
            }
        }
        Ok(CMatrix { dim: n, data: inv })
    }
}

fn pivot_row(a: &[Complex64; STORAGE], k: usize, n: usize) -> usize {
    let mut p = k;
    let mut best = a[k * MAX_DIM + k].norm();
    for i in (k + 1)..n {
        let v = a[i * MAX_DIM + k].norm();
        if v > best {
            best = v;
            p = i;
        }
    }
    p
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<Complex64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("CMatrix").field("rows", &rows).finish()
    }
}

/// Eigenvalues of a complex matrix, repeated according to algebraic multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn product(&self) -> Complex64 {
        self.eigenvalues.iter().product()
    }
}

/// Eigenvalues of `m` by Householder reduction to upper Hessenberg form
/// followed by implicitly shifted single-shift QR with Wilkinson shifts.
pub fn complex_eigenvalues(m: &CMatrix) -> Result<ComplexSpectrum, LinalgError> {
    let n = m.dim();
    let mut h = [[ZERO; MAX_DIM]; MAX_DIM];
    for (i, row) in h.iter_mut().enumerate().take(n) {
        for (j, v) in row.iter_mut().enumerate().take(n) {
            *v = m.get(i, j);
        }
    }
    if h.iter().take(n).any(|r| r.iter().take(n).any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(LinalgError::NoConvergence {
            iterations: 0,
            dim: n,
        });
    }
    reduce_to_hessenberg(&mut h, n);

    let mut eig = vec![ZERO; n];
    let budget = SWEEPS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[lo][lo - 1].norm();
            let diag = h[lo][lo].norm() + h[lo - 1][lo - 1].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                h[lo][lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(LinalgError::NoConvergence {
                iterations: total,
                dim: n,
            });
        }
        let shift = if since_deflation % 11 == 0 {
            // exceptional shift to break cycles
            h[hi][hi] + Complex64::new(0.75 * h[hi][hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    Ok(ComplexSpectrum { eigenvalues: eig })
}

fn reduce_to_hessenberg(h: &mut [[Complex64; MAX_DIM]; MAX_DIM], n: usize) {
    if n < 3 {
        return;
    }
    for k in 0..(n - 2) {
        let norm: f64 = ((k + 1)..n).map(|i| h[i][k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[k + 1][k];
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v = [ZERO; MAX_DIM];
        for i in (k + 1)..n {
            v[i] = h[i][k];
        }
        v[k + 1] -= alpha;
        let vnorm: f64 = ((k + 1)..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut().take(n).skip(k + 1) {
            *vi /= vnorm;
        }
        // H <- (I - 2 v v*) H
        for j in 0..n {
            let mut s = ZERO;
            for i in (k + 1)..n {
                s += v[i].conj() * h[i][j];
            }
            for i in (k + 1)..n {
                h[i][j] -= 2.0 * v[i] * s;
            }
        }
        // H <- H (I - 2 v v*)
        for row in h.iter_mut().take(n) {
            let mut s = ZERO;
            for j in (k + 1)..n {
                s += row[j] * v[j];
            }
            for j in (k + 1)..n {
                row[j] -= 2.0 * s * v[j].conj();
            }
        }
        for row in h.iter_mut().take(n).skip(k + 2) {
            row[k] = ZERO;
        }
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    let ax = x.norm();
    let rho = ax.hypot(y.norm());
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    (ax / rho, (x / ax) * y.conj() / rho)
}

fn qr_sweep(h: &mut [[Complex64; MAX_DIM]; MAX_DIM], lo: usize, hi: usize, shift: Complex64) {
    let mut x = h[lo][lo] - shift;
    let mut y = h[lo + 1][lo];
    for k in lo..hi {
        let (c, s) = givens(x, y);
        let col_start = if k > lo { k - 1 } else { lo };
        for j in col_start..=hi {
            let a = h[k][j];
            let b = h[k + 1][j];
            h[k][j] = c * a + s * b;
            h[k + 1][j] = -s.conj() * a + c * b;
        }
        let row_end = (k + 2).min(hi);
        for row in h.iter_mut().take(row_end + 1).skip(lo) {
            let a = row[k];
            let b = row[k + 1];
            row[k] = c * a + b * s.conj();
            row[k + 1] = -a * s + c * b;
        }
        if k > lo {
            h[k + 1][k - 1] = ZERO;
        }
        if k + 1 < hi {
            x = h[k + 1][k];
            y = h[k + 2][k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_input() {
        let m = CMatrix::from_diag(&[c(0.0, 1.0), c(1.0, 1.0)]);
        let ev = sorted(complex_eigenvalues(&m).unwrap().eigenvalues);
        assert_eq!(ev, vec![c(0.0, 1.0), c(1.0, 1.0)]);
    }

    #[test]
    fn two_by_two_quadratic_roots() {
        // roots of l^2 - l + 0.09 = 0
        let m = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => ZERO,
            (1, 1) => ONE,
            _ => c(0.0, 0.3),
        });
        let ev = sorted(complex_eigenvalues(&m).unwrap().eigenvalues);
        assert!((ev[0] - c(0.1, 0.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.9, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn inverse_and_det_agree() {
        let m = CMatrix::from_fn(3, |i, j| c((i + 2 * j) as f64 * 0.3 + if i == j { 2.0 } else { 0.0 }, (i as f64 - j as f64) * 0.7));
        let inv = m.inverse().unwrap();
        let p = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { ONE } else { ZERO };
                assert!((p.get(i, j) - e).norm() < 1e-13);
            }
        }
        let prod = complex_eigenvalues(&m).unwrap().product();
        assert!((prod - m.det()).norm() < 1e-12 * m.det().norm());
    }

    #[test]
    fn jordan_block_converges() {
        let m = CMatrix::from_fn(4, |i, j| if j == i + 1 { ONE } else if i == j { c(2.0, 1.0) } else { ZERO });
        let ev = complex_eigenvalues(&m).unwrap();
        for l in ev.eigenvalues {
            assert!((l - c(2.0, 1.0)).norm() < 1e-3);
        }
    }

    #[test]
    fn non_finite_input_is_reported() {
        let m = CMatrix::from_diag(&[c(f64::NAN, 0.0), ONE]);
        assert!(matches!(
            complex_eigenvalues(&m),
            Err(LinalgError::NoConvergence { .. })
        ));
    }
}
