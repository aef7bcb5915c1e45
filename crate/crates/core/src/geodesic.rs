//! Geodesics of positive Lagrangian graphs: the `B` matrices of a path
//! `f_t = u(t, .)`, positivity margins, the transport field `zeta_t` and the
//! discrete geodesic residual.

use num_complex::Complex64;

use crate::discretization::{spatial_coordinate_jet, GridFunction, SpatialClass};
use crate::geometry::{section_coordinates, GeometryError};
use crate::linalg::{CMatrix, SymMatrix};
use crate::solver::{DirichletProblem, SolverError};

/// Default floor on the positivity denominator `Re(e^{-i theta} det B_0)`.
pub const DEFAULT_DEN_MIN: f64 = 1e-8;

/// `B = [i dt grad f | I + i Hess_x f]` in frame components and its minors.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatrices {
    /// Rows of the `n x (n+1)` matrix.
    pub b: Vec<Vec<Complex64>>,
    /// `det B_i` for `i = 0..=n`, where `B_i` drops column `i`.
    pub minors: Vec<Complex64>,
}

/// `B` from a space-time frame Hessian (index 0 is time).
pub fn b_matrices_from_hessian(a: &SymMatrix) -> BMatrices {
    let n = a.dim() - 1;
    let i = Complex64::i();
    let b: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            let mut row = Vec::with_capacity(n + 1);
            row.push(i * a.get(r + 1, 0));
            for col in 0..n {
                let re = if r == col { 1.0 } else { 0.0 };
                row.push(Complex64::new(re, a.get(r + 1, col + 1)));
            }
            row
        })
        .collect();
    let minors = (0..=n)
        .map(|drop| {
            CMatrix::from_fn(n, |r, c| {
                let col = if c < drop { c } else { c + 1 };
                b[r][col]
            })
            .det()
        })
        .collect();
    BMatrices { b, minors }
}

/// `B` matrices at an interior node.
pub fn build_b_matrices(problem: &DirichletProblem, u: &GridFunction, idx: usize) -> Result<BMatrices, SolverError> {
    let a = problem.frames().hessian(problem.grid(), u, idx)?;
    Ok(b_matrices_from_hessian(&a))
}

fn rotated_re(z: Complex64, theta: f64) -> f64 {
    (Complex64::from_polar(1.0, -theta) * z).re
}

/// `Re(e^{-i theta} det(I + i B))` for a spatial frame Hessian `B`.
pub fn positivity_value(b: &SymMatrix, theta: f64) -> f64 {
    let n = b.dim();
    let m = CMatrix::from_fn(n, |r, c| Complex64::new(if r == c { 1.0 } else { 0.0 }, b.get(r, c)));
    rotated_re(m.det(), theta)
}

/// Positivity margin per spatial node of slice `ti`; `None` off the inside nodes.
pub fn positivity_margin(
    problem: &DirichletProblem,
    u: &GridFunction,
    ti: usize,
    theta: f64,
) -> Result<Vec<Option<f64>>, SolverError> {
    let grid = problem.grid();
    if ti >= grid.nt() {
        return Err(SolverError::Mismatch(format!("slice {ti} out of range (nt = {})", grid.nt())));
    }
    let slice = u.slice(grid, ti);
    (0..grid.n_spatial())
        .map(|s| {
            if grid.spatial_class(s) != SpatialClass::Inside {
                return Ok(None);
            }
            let b = problem.frames().spatial_hessian(grid, slice, s)?;
            Ok(Some(positivity_value(&b, theta)))
        })
        .collect()
}

/// Coefficients `a^i` of `zeta_t` per node; `None` where the node is not
/// interior or the denominator is below `den_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportField {
    pub coefficients: Vec<Option<Vec<f64>>>,
    pub flagged: usize,
    pub den_min: f64,
}

impl TransportField {
    pub fn max_abs(&self) -> f64 {
        self.coefficients
            .iter()
            .flatten()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

/// `a^i = -(-1)^i Re(e^{-i theta} det B_i) / Re(e^{-i theta} det B_0)`.
pub fn transport_coefficients(bm: &BMatrices, theta: f64, den_min: f64) -> Option<Vec<f64>> {
    let den = rotated_re(bm.minors[0], theta);
    if !(den >= den_min) {
        return None;
    }
    Some(
        (1..bm.minors.len())
            .map(|i| {
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                sign * rotated_re(bm.minors[i], theta) / den
            })
            .collect(),
    )
}

pub fn transport_field(
    problem: &DirichletProblem,
    u: &GridFunction,
    theta: f64,
    den_min: f64,
) -> Result<TransportField, SolverError> {
    let grid = problem.grid();
    let mut coefficients = vec![None; grid.len()];
    let mut flagged = 0;
    for idx in grid.interior_nodes() {
        let bm = build_b_matrices(problem, u, idx)?;
        match transport_coefficients(&bm, theta, den_min) {
            Some(a) => coefficients[idx] = Some(a),
            None => flagged += 1,
        }
    }
    Ok(TransportField {
        coefficients,
        flagged,
        den_min,
    })
}

/// `R = -u_tt + sum_i a^i e_i(u_t)` per interior node; NaN where the
/// transport field is absent.
pub fn geodesic_residual(
    problem: &DirichletProblem,
    u: &GridFunction,
    theta: f64,
    den_min: f64,
) -> Result<GridFunction, SolverError> {
    let grid = problem.grid();
    let mut out = vec![f64::NAN; grid.len()];
    for idx in grid.interior_nodes() {
        let a = problem.frames().hessian(grid, u, idx)?;
        let bm = b_matrices_from_hessian(&a);
        if let Some(coef) = transport_coefficients(&bm, theta, den_min) {
            let drift: f64 = coef.iter().enumerate().map(|(i, ai)| ai * a.get(0, i + 1)).sum();
            out[idx] = -a.get(0, 0) + drift;
        }
    }
    Ok(GridFunction::new(out))
}

/// Sup-norm over finite values.
pub fn sup_norm(f: &GridFunction) -> f64 {
    f.values().iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `h_t = -du/dt` on every slice: central differences inside, one-sided
/// second order at `t = 0, 1`.
pub fn velocity(problem: &DirichletProblem, u: &GridFunction) -> Vec<Vec<f64>> {
    let grid = problem.grid();
    let nt = grid.nt();
    let dt = grid.dt();
    (0..nt)
        .map(|ti| {
            (0..grid.n_spatial())
                .map(|s| {
                    let v = |k: usize| u.get(grid.index(k, s));
                    let d = if ti == 0 {
                        (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * dt)
                    } else if ti + 1 == nt {
                        (3.0 * v(nt - 1) - 4.0 * v(nt - 2) + v(nt - 3)) / (2.0 * dt)
                    } else {
                        (v(ti + 1) - v(ti - 1)) / (2.0 * dt)
                    };
                    -d
                })
                .collect()
        })
        .collect()
}

/// A discrete path of Lagrangian graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPath {
    pub t: Vec<f64>,
    /// `f_t = u(t, .)` per slice, indexed by spatial node.
    pub slices: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    /// Section coordinates `y = g^{-1} grad f_t` at inside spatial nodes.
    pub sections: Vec<Vec<Option<Vec<f64>>>>,
    pub margins: Vec<Vec<Option<f64>>>,
}

impl LagrangianPath {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().flatten().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Smallest margin of each slice.
    pub fn slice_min_margins(&self) -> Vec<f64> {
        self.margins
            .iter()
            .map(|sl| sl.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v)))
            .collect()
    }
}

pub fn export_path(problem: &DirichletProblem, u: &GridFunction, theta: f64) -> Result<LagrangianPath, SolverError> {
    let grid = problem.grid();
    let geom = problem.geometry();
    let mut t = Vec::with_capacity(grid.nt());
    let mut slices = Vec::with_capacity(grid.nt());
    let mut sections = Vec::with_capacity(grid.nt());
    let mut margins = Vec::with_capacity(grid.nt());
    for ti in 0..grid.nt() {
        t.push(grid.t(ti));
        let slice = u.slice(grid, ti);
        slices.push(slice.to_vec());
        let mut ys = vec![None; grid.n_spatial()];
        for s in grid.inside_spatial() {
            let (grad, _) = spatial_coordinate_jet(grid, slice, s)?;
            let y = section_coordinates(geom.as_ref(), &grid.x(s), &grad)
                .map_err(|e: GeometryError| SolverError::Discretization(e.into()))?;
            ys[s] = Some(y);
        }
        sections.push(ys);
        margins.push(positivity_margin(problem, u, ti, theta)?);
    }
    Ok(LagrangianPath {
        t,
        slices,
        velocity: velocity(problem, u),
        sections,
        margins,
    })
}
