//! Post-solve diagnostics: boundary characterization of the interior
//! Hessians, the spatial positivity window, maximum principles and the
//! discrete comparison check.

use std::f64::consts::FRAC_PI_2;

use crate::angle::{sl_angle, theta_tilde};
use crate::discretization::{GridFunction, NodeClass};
use crate::subequation::{dsl_contains_level, dsl_interior_level, window_margin};

use super::{DirichletProblem, SolverParams};

/// Window margins within this band of zero are reported as marginal.
pub const WINDOW_MARGIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldStats {
    pub nodes: usize,
    /// `max |theta_tilde - c|` over interior nodes.
    pub max_abs_dev: f64,
    /// Nodes with `theta_tilde < c - tol_res`.
    pub non_contained: usize,
    pub singular_nodes: usize,
}

pub fn field_stats(problem: &DirichletProblem, u: &GridFunction, params: &SolverParams) -> FieldStats {
    let grid = problem.grid();
    let c = problem.branch().c;
    let mut st = FieldStats {
        nodes: 0,
        max_abs_dev: 0.0,
        non_contained: 0,
        singular_nodes: 0,
    };
    for idx in grid.interior_nodes() {
        let Ok(a) = problem.frames().hessian(grid, u, idx) else { continue };
        let v = theta_tilde(&a, params.tol_s);
        st.nodes += 1;
        let dev = v.value - c;
        if !(dev.abs() <= st.max_abs_dev) {
            st.max_abs_dev = dev.abs();
        }
        if !(dev >= -params.tol_res) {
            st.non_contained += 1;
        }
        if v.on_singular_set {
            st.singular_nodes += 1;
        }
    }
    st
}

/// Spatial window statistics of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceWindow {
    pub t_index: usize,
    pub t: f64,
    pub min_sl_angle: f64,
    pub max_sl_angle: f64,
    pub min_margin: f64,
    pub strict: usize,
    pub marginal: usize,
    pub violations: usize,
}

/// `tr arctan Hess_x u(t, .)(e, e)` against `(c - pi/2, c + pi/2)` on every slice.
pub fn window_stats(problem: &DirichletProblem, u: &GridFunction) -> Vec<SliceWindow> {
    let grid = problem.grid();
    let c = problem.branch().c;
    (0..grid.nt())
        .map(|ti| {
            let slice = u.slice(grid, ti);
            let mut w = SliceWindow {
                t_index: ti,
                t: grid.t(ti),
                min_sl_angle: f64::INFINITY,
                max_sl_angle: f64::NEG_INFINITY,
                min_margin: f64::INFINITY,
                strict: 0,
                marginal: 0,
                violations: 0,
            };
            for s in grid.inside_spatial() {
                let Ok(b) = problem.frames().spatial_hessian(grid, slice, s) else { continue };
                let sl = sl_angle(&b);
                let m = window_margin(&b, c);
                w.min_sl_angle = w.min_sl_angle.min(sl);
                w.max_sl_angle = w.max_sl_angle.max(sl);
                w.min_margin = w.min_margin.min(m);
                if m > WINDOW_MARGIN_TOL {
                    w.strict += 1;
                } else if m >= -WINDOW_MARGIN_TOL {
                    w.marginal += 1;
                } else {
                    w.violations += 1;
                }
            }
            w
        })
        .collect()
}

/// Maximum/minimum principle sanity check. The maximum principle for
/// subsolutions applies when `c > -pi/2`, the minimum principle for
/// solutions when `c <= pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrinciple {
    pub applies_max: bool,
    pub applies_min: bool,
    pub interior_max: f64,
    pub boundary_max: f64,
    pub interior_min: f64,
    pub boundary_min: f64,
    pub slack: f64,
}

impl MaxPrinciple {
    pub fn max_ok(&self) -> bool {
        !self.applies_max || self.interior_max <= self.boundary_max + self.slack
    }

    pub fn min_ok(&self) -> bool {
        !self.applies_min || self.interior_min >= self.boundary_min - self.slack
    }

    pub fn ok(&self) -> bool {
        self.max_ok() && self.min_ok()
    }
}

fn max_principle(problem: &DirichletProblem, u: &GridFunction, slack: f64) -> MaxPrinciple {
    let grid = problem.grid();
    let c = problem.branch().c;
    let mut mp = MaxPrinciple {
        applies_max: c > -FRAC_PI_2,
        applies_min: c <= FRAC_PI_2,
        interior_max: f64::NEG_INFINITY,
        boundary_max: f64::NEG_INFINITY,
        interior_min: f64::INFINITY,
        boundary_min: f64::INFINITY,
        slack,
    };
    for idx in 0..grid.len() {
        let v = u.get(idx);
        match grid.class(idx) {
            NodeClass::Interior => {
                mp.interior_max = mp.interior_max.max(v);
                mp.interior_min = mp.interior_min.min(v);
            }
            NodeClass::Exterior => {}
            _ => {
                mp.boundary_max = mp.boundary_max.max(v);
                mp.boundary_min = mp.boundary_min.min(v);
            }
        }
    }
    mp
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub tol: f64,
    pub nodes: usize,
    /// Interior nodes with `|theta_tilde - c| <= tol`.
    pub within_tol: usize,
    /// Interior nodes passing the boundary test at tolerance:
    /// `theta_tilde(A) >= c - tol` and `theta_tilde(A - eps I) < c + tol`.
    pub on_boundary: usize,
    pub max_abs_dev: f64,
    pub window: Vec<SliceWindow>,
    pub window_strict: usize,
    pub window_marginal: usize,
    pub window_violations: usize,
    pub max_principle: MaxPrinciple,
    pub certified: bool,
}

/// Certifies `u` at tolerance `params.tol_res`.
pub fn certify(u: &GridFunction, problem: &DirichletProblem, params: &SolverParams) -> CertificationReport {
    certify_with_tol(u, problem, params, params.tol_res)
}

/// Certification at an explicit tolerance.
pub fn certify_with_tol(
    u: &GridFunction,
    problem: &DirichletProblem,
    params: &SolverParams,
    tol: f64,
) -> CertificationReport {
    let grid = problem.grid();
    let c = problem.branch().c;
    let mut nodes = 0;
    let mut within = 0;
    let mut on_boundary = 0;
    let mut worst = 0.0f64;
    for idx in grid.interior_nodes() {
        nodes += 1;
        let Ok(a) = problem.frames().hessian(grid, u, idx) else { continue };
        let v = theta_tilde(&a, params.tol_s).value;
        let dev = (v - c).abs();
        if !(dev <= worst) {
            worst = dev;
        }
        if dev <= tol {
            within += 1;
        }
        let shifted = theta_tilde(&a.shift(-params.eps_int), params.tol_s).value;
        if v >= c - tol && shifted < c + tol {
            on_boundary += 1;
        }
    }
    let window = window_stats(problem, u);
    let window_strict = window.iter().map(|w| w.strict).sum();
    let window_marginal = window.iter().map(|w| w.marginal).sum();
    let window_violations = window.iter().map(|w| w.violations).sum();
    let scale = u
        .values()
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mp = max_principle(problem, u, 1e-9 * (1.0 + scale));
    let certified = nodes > 0 && within == nodes && on_boundary == nodes && window_violations == 0 && mp.ok();
    CertificationReport {
        tol,
        nodes,
        within_tol: within,
        on_boundary,
        max_abs_dev: worst,
        window,
        window_strict,
        window_marginal,
        window_violations,
        max_principle: mp,
        certified,
    }
}

/// Result of the zero maximum principle check for `u + v`.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonOutcome {
    Holds { max_sum: f64 },
    Violated { nodes: usize, max_sum: f64 },
    NotApplicable { reason: String, failing_nodes: usize },
}

impl ComparisonOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, ComparisonOutcome::Holds { .. })
    }
}

/// Checks `u + v <= 0` at interior nodes, given `u` in `F_c` and `v` in the
/// dual at every interior node and `u + v <= tol` on the boundary.
pub fn comparison_check(
    problem: &DirichletProblem,
    u: &GridFunction,
    v: &GridFunction,
    params: &SolverParams,
    tol: f64,
) -> ComparisonOutcome {
    let grid = problem.grid();
    let c = problem.branch().c;
    let mut bad_u = 0;
    let mut bad_v = 0;
    for idx in grid.interior_nodes() {
        let (Ok(au), Ok(av)) = (problem.frames().hessian(grid, u, idx), problem.frames().hessian(grid, v, idx)) else {
            bad_u += 1;
            continue;
        };
        let (contained, margin) = dsl_contains_level(&au, c, params.tol_s);
        if !contained && margin < -params.tol_res {
            bad_u += 1;
        }
        // v dual-contained: -Hess v is not interior to F_c
        if dsl_interior_level(&(-av), c, params.eps_int, params.tol_s) {
            bad_v += 1;
        }
    }
    if bad_u > 0 {
        return ComparisonOutcome::NotApplicable {
            reason: "u is not in F_c at every interior node".into(),
            failing_nodes: bad_u,
        };
    }
    if bad_v > 0 {
        return ComparisonOutcome::NotApplicable {
            reason: "v is not dual-contained at every interior node".into(),
            failing_nodes: bad_v,
        };
    }
    let boundary_bad = (0..grid.len())
        .filter(|&i| grid.class(i).is_boundary() && !(u.get(i) + v.get(i) <= tol))
        .count();
    if boundary_bad > 0 {
        return ComparisonOutcome::NotApplicable {
            reason: "u + v exceeds 0 on the boundary".into(),
            failing_nodes: boundary_bad,
        };
    }
    let mut max_sum = f64::NEG_INFINITY;
    let mut violations = 0;
    for idx in grid.interior_nodes() {
        let s = u.get(idx) + v.get(idx);
        max_sum = max_sum.max(s);
        if !(s <= tol) {
            violations += 1;
        }
    }
    if violations == 0 {
        ComparisonOutcome::Holds { max_sum }
    } else {
        ComparisonOutcome::Violated {
            nodes: violations,
            max_sum,
        }
    }
}
