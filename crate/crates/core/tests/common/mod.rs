//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use sldsl_core::linalg::{random_symmetric, SymMatrix};

/// Eigenvalues of a symmetric matrix of dimension 1..=3 in closed form
/// (quadratic formula, trigonometric cubic), ascending.
pub fn closed_form_sym_eigenvalues(b: &SymMatrix) -> Vec<f64> {
    let mut out = match b.dim() {
        1 => vec![b.get(0, 0)],
        2 => {
            let (a, c, d) = (b.get(0, 0), b.get(0, 1), b.get(1, 1));
            let m = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + c * c).sqrt();
            vec![m - r, m + r]
        }
        3 => {
            let q = b.trace() / 3.0;
            let p1 = b.get(0, 1).powi(2) + b.get(0, 2).powi(2) + b.get(1, 2).powi(2);
            let p2 = (b.get(0, 0) - q).powi(2) + (b.get(1, 1) - q).powi(2) + (b.get(2, 2) - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            if p < 1e-300 {
                vec![q; 3]
            } else {
                let bm = b.shift(-q).scale(1.0 / p);
                let r = (bm.det() / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let e1 = q + 2.0 * p * phi.cos();
                let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
                vec![e1, 3.0 * q - e1 - e3, e3]
            }
        }
        d => panic!("closed form unavailable for dimension {d}"),
    };
    out.sort_by(f64::total_cmp);
    out
}

/// Characteristic polynomial coefficients of a complex matrix by
/// Faddeev-LeVerrier: `p(z) = z^d + c[d-1] z^{d-1} + ... + c[0]`.
pub fn char_poly(m: &[Vec<Complex64>]) -> Vec<Complex64> {
    let d = m.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
    coeffs[d] = Complex64::new(1.0, 0.0);
    let mut mk = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for k in 1..=d {
        // M_k = A M_{k-1} + c_{d-k+1} I
        let mut next = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    s += m[i][l] * mk[l][j];
                }
                next[i][j] = s;
            }
            next[i][i] += coeffs[d - k + 1];
        }
        mk = next;
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for l in 0..d {
                tr += m[i][l] * mk[l][i];
            }
        }
        coeffs[d - k] = -tr / k as f64;
    }
    coeffs
}

/// Roots of a monic polynomial by Durand-Kerner iteration.
pub fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let scale = 1.0 + coeffs[..d].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32) * scale).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..d {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * scale {
            break;
        }
    }
    roots
}

/// Principal argument with `-pi` mapped to `pi`.
pub fn arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Space-time angle from characteristic-polynomial roots of `I_n + iA`.
pub fn theta_hat_oracle(a: &SymMatrix) -> f64 {
    let d = a.dim();
    let m: Vec<Vec<Complex64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| Complex64::new(if i == j && i > 0 { 1.0 } else { 0.0 }, a.get(i, j)))
                .collect()
        })
        .collect();
    durand_kerner(&char_poly(&m))
        .into_iter()
        .map(|z| {
            if z.im.abs() <= 1e-12 * (1.0 + z.norm()) {
                arg(Complex64::new(z.re, 0.0))
            } else {
                arg(z)
            }
        })
        .sum()
}

/// Random symmetric space-time matrix whose first row is bounded away from zero.
pub fn random_offset_matrix<R: Rng>(rng: &mut R, n: usize, scale: f64) -> SymMatrix {
    loop {
        let a = random_symmetric(rng, n + 1, scale);
        if (0..=n).any(|j| a.get(0, j).abs() > 1e-3) {
            return a;
        }
    }
}

/// `diag(0, B)` for a random spatial block.
pub fn random_singular<R: Rng>(rng: &mut R, n: usize, scale: f64) -> SymMatrix {
    SymMatrix::bordered(0.0, &random_symmetric(rng, n, scale))
}
