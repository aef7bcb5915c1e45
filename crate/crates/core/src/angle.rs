//! Special Lagrangian angle and the space-time Lagrangian angle.
//!
//! Index 0 of a space-time matrix is the time direction. The space-time angle
//! of `A` is the sum of principal arguments of the eigenvalues of
//! `I_n + iA`, where `I_n = diag(0, 1, ..., 1)`. It is undefined on the
//! singular set `S` (first row and column zero); there the upper
//! semicontinuous extension takes the value `pi/2 + tr arctan(B)` for the
//! spatial block `B`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    complex_eigenvalues, principal_arg, sym_eigenvalues, CMatrix, LinalgError, SymMatrix,
};

/// Default absolute tolerance on first row/column entries for membership in `S`.
pub const DEFAULT_TOL_S: f64 = 1e-10;

/// Eigenvalues with `|Im| <= SNAP_REL * (1 + |lambda|)` are treated as real.
const SNAP_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngleError {
    #[error("matrix lies in the singular set (max |A[0][j]| = {max_entry:e} <= {tol_s:e}); use theta_tilde")]
    SingularSet { max_entry: f64, tol_s: f64 },
    #[error("space-time matrix needs dimension >= 2, got {0}")]
    Dimension(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Value of the extended angle together with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleValue {
    pub value: f64,
    /// True when the singular-set formula was used.
    pub on_singular_set: bool,
}

/// `tr arctan(B)`, the special Lagrangian angle of a spatial Hessian.
pub fn sl_angle(b: &SymMatrix) -> f64 {
    sym_eigenvalues(b).iter().map(|m| m.atan()).sum()
}

/// Largest absolute entry of the first row (and column).
pub fn time_row_magnitude(a: &SymMatrix) -> f64 {
    (0..a.dim()).fold(0.0f64, |m, j| m.max(a.get(0, j).abs()))
}

pub fn in_singular_set(a: &SymMatrix, tol_s: f64) -> bool {
    time_row_magnitude(a) <= tol_s
}

/// `I_n + iA` with `I_n = diag(0, 1, ..., 1)`.
pub fn spacetime_operator(a: &SymMatrix) -> CMatrix {
    CMatrix::from_fn(a.dim(), |i, j| {
        let re = if i == j && i > 0 { 1.0 } else { 0.0 };
        Complex64::new(re, a.get(i, j))
    })
}

fn snap(z: Complex64) -> Complex64 {
    if z.im.abs() <= SNAP_REL * (1.0 + z.norm()) {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Eigenvalues of `I_n + iA` (snapped to the real axis when nearly real) and
/// the sum of their principal arguments.
pub fn theta_hat_eigen(a: &SymMatrix, tol_s: f64) -> Result<(f64, Vec<Complex64>), AngleError> {
    if a.dim() < 2 {
        return Err(AngleError::Dimension(a.dim()));
    }
    let mag = time_row_magnitude(a);
    if mag <= tol_s {
        return Err(AngleError::SingularSet {
            max_entry: mag,
            tol_s,
        });
    }
    let spectrum = complex_eigenvalues(&spacetime_operator(a))?;
    let eig: Vec<Complex64> = spectrum.eigenvalues.into_iter().map(snap).collect();
    let value = eig.iter().map(|&z| principal_arg(z)).sum();
    Ok((value, eig))
}

/// The space-time Lagrangian angle, defined off the singular set.
pub fn theta_hat(a: &SymMatrix) -> Result<f64, AngleError> {
    theta_hat_eigen(a, DEFAULT_TOL_S).map(|(v, _)| v)
}

/// Same angle through the Schur complement of the time entry:
/// `tr arctan(B) + arg(i a + b^T (I + iB)^{-1} b)`. Used when the QR
/// iteration fails to converge.
pub(crate) fn theta_hat_schur(a: &SymMatrix) -> Result<f64, AngleError> {
    let n = a.dim() - 1;
    let block = a.trailing_block();
    let m = CMatrix::from_fn(n, |i, j| {
        let re = if i == j { 1.0 } else { 0.0 };
        Complex64::new(re, block.get(i, j))
    });
    let inv = m.inverse()?;
    let b = a.first_row_tail();
    let mut s = Complex64::new(0.0, a.get(0, 0));
    for i in 0..n {
        for j in 0..n {
            s += b[i] * inv.get(i, j) * b[j];
        }
    }
    Ok(sl_angle(&block) + principal_arg(s))
}

/// Upper semicontinuous extension of the space-time angle.
pub fn theta_tilde(a: &SymMatrix, tol_s: f64) -> AngleValue {
    assert!(a.dim() >= 2, "space-time matrix needs dimension >= 2");
    if in_singular_set(a, tol_s) {
        return AngleValue {
            value: FRAC_PI_2 + sl_angle(&a.trailing_block()),
            on_singular_set: true,
        };
    }
    let value = match theta_hat_eigen(a, tol_s) {
        Ok((v, _)) => v,
        Err(_) => theta_hat_schur(a).unwrap_or(f64::NAN),
    };
    AngleValue {
        value,
        on_singular_set: false,
    }
}

/// Gradient of the space-time angle with respect to `A`, `Re (I_n + iA)^{-1}`.
/// `None` where the operator is singular.
pub fn theta_hat_gradient(a: &SymMatrix) -> Option<SymMatrix> {
    let inv = spacetime_operator(a).inverse().ok()?;
    Some(SymMatrix::from_fn(a.dim(), |i, j| inv.get(i, j).re))
}
