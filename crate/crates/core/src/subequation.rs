//! Membership tests for the degenerate special Lagrangian subequation
//! `F_c = {A : theta_tilde(A) >= c}`, its Dirichlet dual, and the spatial
//! special Lagrangian subequation `{B : tr arctan(B) >= c}`.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::angle::{sl_angle, theta_tilde};
use crate::linalg::SymMatrix;

/// Slack applied to `>= c` comparisons.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Default size of the inward `-eps I` shift used to test interiority.
pub const DEFAULT_EPS_INT: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchError {
    #[error("theta = {0} is outside (-pi, pi]")]
    Theta(f64),
    #[error("branch constant c = {c} is outside (-(n+1)pi/2, (n+1)pi/2) for n = {n}; admissible k: {admissible:?}")]
    OutOfRange { c: f64, n: usize, admissible: Vec<i64> },
    #[error("spatial dimension must be at least 1")]
    Dimension,
}

/// Phase `theta` with the branch constant `c = theta + 2 pi k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub theta: f64,
    pub c: f64,
    pub n: usize,
}

fn half_width(n: usize) -> f64 {
    (n as f64 + 1.0) * FRAC_PI_2
}

fn admissible_ks(theta: f64, n: usize) -> Vec<i64> {
    let w = half_width(n);
    let kmax = (w / (2.0 * PI)).ceil() as i64 + 1;
    (-kmax..=kmax)
        .filter(|&k| (theta + 2.0 * PI * k as f64).abs() < w)
        .collect()
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut t = x.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

impl Branch {
    pub fn from_theta(theta: f64, k: i64, n: usize) -> Result<Self, BranchError> {
        if n == 0 {
            return Err(BranchError::Dimension);
        }
        if !(theta > -PI && theta <= PI) {
            return Err(BranchError::Theta(theta));
        }
        let c = theta + 2.0 * PI * k as f64;
        if c.abs() >= half_width(n) {
            return Err(BranchError::OutOfRange {
                c,
                n,
                admissible: admissible_ks(theta, n),
            });
        }
        Ok(Self { theta, c, n })
    }

    /// Branch with a prescribed constant `c`; the phase is `c` wrapped into `(-pi, pi]`.
    pub fn from_level(c: f64, n: usize) -> Result<Self, BranchError> {
        if n == 0 {
            return Err(BranchError::Dimension);
        }
        let theta = wrap_angle(c);
        if !c.is_finite() || c.abs() >= half_width(n) {
            return Err(BranchError::OutOfRange {
                c,
                n,
                admissible: admissible_ks(theta, n),
            });
        }
        Ok(Self { theta, c, n })
    }
}

pub fn branch_from_theta(theta: f64, k: i64, n: usize) -> Result<Branch, BranchError> {
    Branch::from_theta(theta, k, n)
}

/// Membership data with the signed margin `value - c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipVerdict {
    pub contained: bool,
    pub interior: bool,
    pub margin: f64,
}

pub(crate) fn dsl_contains_level(a: &SymMatrix, c: f64, tol_s: f64) -> (bool, f64) {
    let margin = theta_tilde(a, tol_s).value - c;
    (margin >= -MEMBERSHIP_SLACK, margin)
}

pub(crate) fn dsl_interior_level(a: &SymMatrix, c: f64, eps_int: f64, tol_s: f64) -> bool {
    assert!(eps_int > 0.0, "eps_int must be positive");
    let (contained, _) = dsl_contains_level(a, c, tol_s);
    contained && theta_tilde(&a.shift(-eps_int), tol_s).value >= c
}

/// Full verdict with an explicit interior shift.
pub fn dsl_verdict(a: &SymMatrix, br: &Branch, eps_int: f64, tol_s: f64) -> MembershipVerdict {
    assert_eq!(a.dim(), br.n + 1, "space-time matrix dimension must be n + 1");
    let (contained, margin) = dsl_contains_level(a, br.c, tol_s);
    MembershipVerdict {
        contained,
        interior: contained && dsl_interior_level(a, br.c, eps_int, tol_s),
        margin,
    }
}

pub fn dsl_contains(a: &SymMatrix, br: &Branch, tol_s: f64) -> MembershipVerdict {
    dsl_verdict(a, br, DEFAULT_EPS_INT, tol_s)
}

/// `A` is interior when `A - eps_int I` still lies in `F_c`.
pub fn dsl_interior(a: &SymMatrix, br: &Branch, eps_int: f64, tol_s: f64) -> bool {
    assert_eq!(a.dim(), br.n + 1, "space-time matrix dimension must be n + 1");
    dsl_interior_level(a, br.c, eps_int, tol_s)
}

/// Dirichlet dual: `A` belongs to the dual iff `-A` is not interior to `F_c`.
pub fn dsl_dual_contains(a: &SymMatrix, br: &Branch, eps_int: f64, tol_s: f64) -> bool {
    !dsl_interior(&(-*a), br, eps_int, tol_s)
}

pub fn dsl_on_boundary(a: &SymMatrix, br: &Branch, eps_int: f64, tol_s: f64) -> bool {
    let v = dsl_verdict(a, br, eps_int, tol_s);
    v.contained && !v.interior
}

pub fn sl_contains(b: &SymMatrix, c: f64) -> MembershipVerdict {
    let margin = sl_angle(b) - c;
    MembershipVerdict {
        contained: margin >= -MEMBERSHIP_SLACK,
        interior: margin > 0.0,
        margin,
    }
}

/// Dual of the special Lagrangian subequation at level `c`.
pub fn sl_dual_contains(b: &SymMatrix, c: f64) -> bool {
    !sl_contains(&(-*b), c).interior
}

/// Signed distance of `tr arctan(B)` to the nearer end of `(c - pi/2, c + pi/2)`.
pub fn window_margin(b: &SymMatrix, c: f64) -> f64 {
    let s = sl_angle(b);
    (s - (c - FRAC_PI_2)).min((c + FRAC_PI_2) - s)
}

/// Strict membership of `tr arctan(B)` in `(c - pi/2, c + pi/2)`.
pub fn positivity_window(b: &SymMatrix, br: &Branch) -> bool {
    window_margin(b, br.c) > 0.0
}
