//! Seeded generators for test matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_dim, Matrix, SymMatrix};

/// Haar-like orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
/// Deterministic for a fixed `seed`.
pub fn random_orthogonal(seed: u64, dim: usize) -> Matrix {
    check_dim(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut cols: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        if orthonormalize(&mut cols) {
            return Matrix::from_fn(dim, |i, j| cols[j][i]);
        }
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Returns false on
/// (numerically) dependent input.
fn orthonormalize(cols: &mut [Vec<f64>]) -> bool {
    for j in 0..cols.len() {
        for _ in 0..2 {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (a, b) in tail[0].iter_mut().zip(&head[k]) {
                    *a -= dot * b;
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return false;
        }
        cols[j].iter_mut().for_each(|a| *a /= norm);
    }
    true
}

/// Symmetric matrix with independent entries uniform in `[-scale, scale]`.
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            m.set(i, j, rng.random_range(-scale..=scale));
        }
    }
    m
}

/// Positive semidefinite `L L^T` with uniform `L` entries in `[-scale, scale]`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> SymMatrix {
    let l = Matrix::from_fn(dim, |_, _| rng.random_range(-scale..=scale));
    SymMatrix::from_fn(dim, |i, j| (0..dim).map(|k| l.get(i, k) * l.get(j, k)).sum())
}

/// Symmetric positive definite `L L^T + eps I`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, dim: usize, eps: f64) -> SymMatrix {
    random_psd(rng, dim, 1.0).shift(eps)
}
