//! Dirichlet problem for the Riemannian degenerate special Lagrangian
//! equation on `[0,1] x D`: data validation, initial subsolutions, a damped
//! pseudo-time iteration, certification and comparison diagnostics.

mod barrier;
mod certify;

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::angle::{sl_angle, theta_hat_gradient, theta_tilde, DEFAULT_TOL_S};
use crate::discretization::{
    DiscretizationError, FrameCache, GridFunction, NodeClass, ScalarField, SpaceTimeGrid,
};
use crate::geometry::ChartGeometry;
use crate::linalg::SymMatrix;
use crate::subequation::{Branch, DEFAULT_EPS_INT, MEMBERSHIP_SLACK};

/// Bisection steps used to locate the local root when a step overshoots.
const LOCAL_BISECTIONS: usize = 40;

pub use barrier::{barrier_probe, BarrierParams, BarrierReport, BarrierSample};
pub use certify::{
    certify, certify_with_tol, comparison_check, field_stats, window_stats, CertificationReport, ComparisonOutcome,
    FieldStats, MaxPrinciple, SliceWindow, WINDOW_MARGIN_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver parameter: {0}")]
    Params(String),
    #[error("problem mismatch: {0}")]
    Mismatch(String),
    #[error("endpoint datum phi{endpoint} is not finite at {at:?}")]
    NonFiniteData { endpoint: usize, at: Vec<f64> },
    #[error("iteration diverged at step {iteration}: residual {residual:e} vs initial {initial:e} (worst node {worst_node})")]
    Diverged {
        iteration: usize,
        residual: f64,
        initial: f64,
        worst_node: usize,
    },
    #[error("non-finite angle at node {node} (iteration {iteration})")]
    NonFinite { node: usize, iteration: usize },
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    LinearInterp,
    PerronSubsolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tau_factor: f64,
    pub tol_res: f64,
    pub max_iter: usize,
    pub eps_int: f64,
    pub tol_s: f64,
    pub init_mode: InitMode,
    /// Bound on `tau * kappa`, where `kappa` is the local sensitivity of the
    /// angle to the nodal value.
    pub jacobi_damping: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tau_factor: 0.2,
            tol_res: 1e-6,
            max_iter: 200_000,
            eps_int: DEFAULT_EPS_INT,
            tol_s: DEFAULT_TOL_S,
            init_mode: InitMode::LinearInterp,
            jacobi_damping: 0.25,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Params(m.into()));
        if !(self.tau_factor > 0.0 && self.tau_factor < 1.0) {
            return bad("tau_factor must lie in (0, 1)");
        }
        if !(self.tol_res > 0.0) {
            return bad("tol_res must be positive");
        }
        if !(self.eps_int > 0.0) {
            return bad("eps_int must be positive");
        }
        if !(self.tol_s >= 0.0) {
            return bad("tol_S must be non-negative");
        }
        if !(self.jacobi_damping > 0.0 && self.jacobi_damping <= 1.0) {
            return bad("jacobi_damping must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Endpoint potentials on a space-time grid together with geometry and branch.
#[derive(Clone)]
pub struct DirichletProblem {
    geometry: Arc<dyn ChartGeometry>,
    grid: SpaceTimeGrid,
    frames: FrameCache,
    branch: Branch,
    phi: [Vec<f64>; 2],
}

impl std::fmt::Debug for DirichletProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletProblem")
            .field("geometry", &self.geometry.label())
            .field("grid", &self.grid.counts())
            .field("nt", &self.grid.nt())
            .field("branch", &self.branch)
            .finish()
    }
}

impl DirichletProblem {
    pub fn new(
        geometry: Arc<dyn ChartGeometry>,
        grid: SpaceTimeGrid,
        branch: Branch,
        phi0: ScalarField,
        phi1: ScalarField,
    ) -> Result<Self, SolverError> {
        if geometry.dim() != grid.n() || branch.n != grid.n() {
            return Err(SolverError::Mismatch(format!(
                "geometry dim {}, grid dim {}, branch n {}",
                geometry.dim(),
                grid.n(),
                branch.n
            )));
        }
        let frames = FrameCache::new(&grid, geometry.clone())?;
        let sample = |f: &ScalarField| -> Vec<f64> {
            (0..grid.n_spatial())
                .map(|s| match grid.spatial_class(s) {
                    crate::discretization::SpatialClass::Outside => f64::NAN,
                    _ => f(grid.data_point(s)),
                })
                .collect()
        };
        let phi = [sample(&phi0), sample(&phi1)];
        Ok(Self {
            geometry,
            grid,
            frames,
            branch,
            phi,
        })
    }

    pub fn geometry(&self) -> &Arc<dyn ChartGeometry> {
        &self.geometry
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn frames(&self) -> &FrameCache {
        &self.frames
    }

    pub fn branch(&self) -> &Branch {
        &self.branch
    }

    /// Sampled endpoint datum `phi_0` or `phi_1` on the spatial grid.
    pub fn endpoint(&self, i: usize) -> &[f64] {
        &self.phi[i]
    }

    /// Dirichlet value `(1 - t) phi_0 + t phi_1` at a boundary node.
    pub fn boundary_value(&self, idx: usize) -> f64 {
        let (ti, s) = self.grid.split(idx);
        if ti == 0 {
            return self.phi[0][s];
        }
        if ti + 1 == self.grid.nt() {
            return self.phi[1][s];
        }
        let t = self.grid.t(ti);
        (1.0 - t) * self.phi[0][s] + t * self.phi[1][s]
    }

    /// Same problem with `a t + b` added to the data.
    pub fn with_gauge(&self, a: f64, b: f64) -> Self {
        let mut out = self.clone();
        out.phi[0].iter_mut().for_each(|v| *v += b);
        out.phi[1].iter_mut().for_each(|v| *v += a + b);
        out
    }

    /// Same grid and geometry with new endpoint data.
    pub fn with_data(&self, phi0: ScalarField, phi1: ScalarField) -> Self {
        let mut out = self.clone();
        for s in 0..self.grid.n_spatial() {
            if self.grid.spatial_class(s) != crate::discretization::SpatialClass::Outside {
                let p = self.grid.data_point(s);
                out.phi[0][s] = phi0(p);
                out.phi[1][s] = phi1(p);
            }
        }
        out
    }
}

/// Hypothesis margins for one endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointValidation {
    /// `min (tr arctan Hess phi_i - (c - pi/2))` over inside nodes.
    pub lower_margin: f64,
    /// `min ((c + pi/2) - tr arctan Hess phi_i)` over inside nodes.
    pub upper_margin: f64,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub worst_lower_at: Vec<f64>,
    pub worst_upper_at: Vec<f64>,
}

impl EndpointValidation {
    pub fn hypothesis_one(&self) -> bool {
        self.lower_violations == 0
    }

    pub fn hypothesis_two(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub endpoints: [EndpointValidation; 2],
}

impl ValidationReport {
    pub fn hypothesis_one(&self) -> bool {
        self.endpoints.iter().all(EndpointValidation::hypothesis_one)
    }

    pub fn hypothesis_two(&self) -> bool {
        self.endpoints.iter().all(EndpointValidation::hypothesis_two)
    }

    pub fn min_margin(&self) -> f64 {
        self.endpoints
            .iter()
            .map(|e| e.lower_margin.min(e.upper_margin))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks the endpoint hypotheses `Hess phi_i in F_{c - pi/2}` and
/// `tr arctan Hess phi_i < c + pi/2`. Violations are reported, not fatal.
pub fn validate_data(problem: &DirichletProblem) -> Result<ValidationReport, SolverError> {
    let grid = &problem.grid;
    let c = problem.branch.c;
    let mut reports = Vec::with_capacity(2);
    for (i, phi) in problem.phi.iter().enumerate() {
        for s in 0..grid.n_spatial() {
            if grid.spatial_class(s) != crate::discretization::SpatialClass::Outside && !phi[s].is_finite() {
                return Err(SolverError::NonFiniteData {
                    endpoint: i,
                    at: grid.data_point(s).to_vec(),
                });
            }
        }
        let mut rep = EndpointValidation {
            lower_margin: f64::INFINITY,
            upper_margin: f64::INFINITY,
            lower_violations: 0,
            upper_violations: 0,
            worst_lower_at: Vec::new(),
            worst_upper_at: Vec::new(),
        };
        for s in grid.inside_spatial() {
            let b = problem.frames.spatial_hessian(grid, phi, s)?;
            let sl = sl_angle(&b);
            let lower = sl - (c - FRAC_PI_2);
            let upper = (c + FRAC_PI_2) - sl;
            if lower < -MEMBERSHIP_SLACK {
                rep.lower_violations += 1;
            }
            if upper <= 0.0 {
                rep.upper_violations += 1;
            }
            if lower < rep.lower_margin {
                rep.lower_margin = lower;
                rep.worst_lower_at = grid.x(s);
            }
            if upper < rep.upper_margin {
                rep.upper_margin = upper;
                rep.worst_upper_at = grid.x(s);
            }
        }
        reports.push(rep);
    }
    let second = reports.pop().expect("two endpoints");
    let first = reports.pop().expect("two endpoints");
    Ok(ValidationReport {
        endpoints: [first, second],
    })
}

/// Initial iterate; boundary nodes always carry the Dirichlet data.
pub fn initial_guess(problem: &DirichletProblem, params: &SolverParams) -> GridFunction {
    let grid = &problem.grid;
    let [phi0, phi1] = &problem.phi;
    let big_c = (0..grid.n_spatial())
        .filter(|&s| phi0[s].is_finite() && phi1[s].is_finite())
        .map(|s| (phi0[s] - phi1[s]).abs())
        .fold(0.0f64, f64::max)
        + 1.0;
    let mut u = GridFunction::new(vec![f64::NAN; grid.len()]);
    for idx in 0..grid.len() {
        let class = grid.class(idx);
        let v = match class {
            NodeClass::Exterior => f64::NAN,
            c if c.is_boundary() => problem.boundary_value(idx),
            _ => {
                let (ti, s) = grid.split(idx);
                let t = grid.t(ti);
                match params.init_mode {
                    InitMode::LinearInterp => (1.0 - t) * phi0[s] + t * phi1[s],
                    InitMode::PerronSubsolution => {
                        (phi0[s] - big_c * t).max(phi1[s] - big_c * (1.0 - t))
                    }
                }
            }
        };
        u.set(idx, v);
    }
    u
}

/// The Eq.-style subsolution `max(phi_0 - C t, phi_1 - C (1 - t))` at every
/// non-exterior node, with an explicit constant.
pub fn perron_subsolution(problem: &DirichletProblem, big_c: f64) -> GridFunction {
    let grid = &problem.grid;
    let [phi0, phi1] = &problem.phi;
    GridFunction::new(
        (0..grid.len())
            .map(|idx| {
                if grid.class(idx) == NodeClass::Exterior {
                    return f64::NAN;
                }
                let (ti, s) = grid.split(idx);
                let t = grid.t(ti);
                (phi0[s] - big_c * t).max(phi1[s] - big_c * (1.0 - t))
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    pub initial_residual: f64,
    pub residual: f64,
    /// Residual sup-norm before each sweep, ending with the final value.
    pub residual_history: Vec<f64>,
    pub stats: FieldStats,
    pub window: Vec<SliceWindow>,
    pub wall_clock: Duration,
}

/// One sweep's nodal angle residuals and local steps.
struct Sweep {
    residual: f64,
    worst: usize,
    updates: Vec<(usize, f64)>,
}

fn sweep(
    problem: &DirichletProblem,
    params: &SolverParams,
    u: &GridFunction,
    interior: &[usize],
    iteration: usize,
) -> Result<Sweep, SolverError> {
    let grid = &problem.grid;
    let c = problem.branch.c;
    let tau0 = params.tau_factor * grid.h_min().powi(2);
    let mut weights = Vec::with_capacity(grid.n() + 1);
    weights.push(2.0 / grid.dt().powi(2));
    weights.extend(grid.spacing().iter().map(|h| 2.0 / (h * h)));

    let mut out = Sweep {
        residual: 0.0,
        worst: interior.first().copied().unwrap_or(0),
        updates: Vec::with_capacity(interior.len()),
    };
    for &idx in interior {
        let a = problem.frames.hessian(grid, u, idx)?;
        let theta = theta_tilde(&a, params.tol_s);
        let r = theta.value - c;
        if !r.is_finite() {
            return Err(SolverError::NonFinite { node: idx, iteration });
        }
        if r.abs() > out.residual {
            out.residual = r.abs();
            out.worst = idx;
        }
        let (_, s) = grid.split(idx);
        let h = problem.frames.spacetime_frame(s).expect("interior node has a frame");
        let mut tau = tau0;
        if !theta.on_singular_set {
            if let Some(g) = theta_hat_gradient(&a) {
                let d = a.dim();
                let mut kappa = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    let mut q = 0.0;
                    for p in 0..d {
                        for r in 0..d {
                            q += h.get(p, i) * g.get(p, r) * h.get(r, i);
                        }
                    }
                    kappa += w * q;
                }
                if kappa > 0.0 {
                    tau = tau.min(params.jacobi_damping / kappa);
                }
            }
        }
        let mut step = (tau * r).clamp(-PI * tau, PI * tau);
        // Raising u at the node lowers A by step * P; if that overshoots the
        // local root, take the damped root instead.
        let p = SymMatrix::from_diag(&weights).congruence(h);
        let local = |delta: f64| theta_tilde(&(a - p.scale(delta)), params.tol_s).value - c;
        if step != 0.0 && local(step) * r < 0.0 {
            let (mut lo, mut hi) = (0.0, step);
            for _ in 0..LOCAL_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if local(mid) * r > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            step = params.jacobi_damping * 0.5 * (lo + hi);
        }
        out.updates.push((idx, step));
    }
    Ok(out)
}

/// Runs the damped iteration from `initial_guess`.
pub fn solve(problem: &DirichletProblem, params: &SolverParams) -> Result<SolveReport, SolverError> {
    solve_from(problem, params, initial_guess(problem, params))
}

/// Runs the damped iteration from a given iterate; boundary values are reset
/// to the Dirichlet data first.
pub fn solve_from(
    problem: &DirichletProblem,
    params: &SolverParams,
    mut u: GridFunction,
) -> Result<SolveReport, SolverError> {
    params.validate()?;
    let grid = &problem.grid;
    if u.len() != grid.len() {
        return Err(SolverError::Mismatch(format!(
            "iterate has {} values, grid has {} nodes",
            u.len(),
            grid.len()
        )));
    }
    let start = Instant::now();
    for idx in 0..grid.len() {
        let class = grid.class(idx);
        if class.is_boundary() {
            u.set(idx, problem.boundary_value(idx));
        } else if class == NodeClass::Exterior {
            u.set(idx, f64::NAN);
        }
    }
    let interior: Vec<usize> = grid.interior_nodes().collect();
    let mut history = Vec::new();
    let mut initial = None;
    let mut iterations = 0;
    let converged = loop {
        let sw = sweep(problem, params, &u, &interior, iterations)?;
        history.push(sw.residual);
        let init = *initial.get_or_insert(sw.residual);
        if sw.residual <= params.tol_res {
            break true;
        }
        if sw.residual > 10.0 * init.max(params.tol_res) {
            return Err(SolverError::Diverged {
                iteration: iterations,
                residual: sw.residual,
                initial: init,
                worst_node: sw.worst,
            });
        }
        if iterations >= params.max_iter {
            break false;
        }
        for (idx, step) in sw.updates {
            u.set(idx, u.get(idx) + step);
        }
        iterations += 1;
    };
    let stats = field_stats(problem, &u, params);
    let window = window_stats(problem, &u);
    Ok(SolveReport {
        iterations,
        converged,
        initial_residual: history[0],
        residual: *history.last().expect("at least one sweep"),
        residual_history: history,
        stats,
        window,
        solution: u,
        wall_clock: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, DomainSpec};
    use crate::geometry::euclidean;

    fn line_problem(lo: f64, hi: f64, m: usize, c: f64, phi0: ScalarField, phi1: ScalarField) -> DirichletProblem {
        let grid = build_grid(&DomainSpec::Box { lo: vec![lo], hi: vec![hi] }, m, &[m]).unwrap();
        DirichletProblem::new(Arc::new(euclidean(1)), grid, Branch::from_level(c, 1).unwrap(), phi0, phi1).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        let p = SolverParams {
            tau_factor: 1.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SolverParams {
            tol_res: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn validation_examples() {
        let c = 3.0 * PI / 4.0;
        let kappa = (c - FRAC_PI_2).tan() + 0.5;
        let p = line_problem(-1.0, 1.0, 9, c, Arc::new(move |x| 0.5 * kappa * x[0] * x[0]), Arc::new(move |x| 0.5 * kappa * x[0] * x[0]));
        let rep = validate_data(&p).unwrap();
        assert!(rep.hypothesis_one());
        assert!(rep.endpoints[0].lower_margin > 0.1);

        let p = line_problem(-1.0, 1.0, 9, c, Arc::new(|_| 0.0), Arc::new(|_| 0.0));
        let rep = validate_data(&p).unwrap();
        assert!(!rep.hypothesis_one());
        assert!((rep.endpoints[0].lower_margin + PI / 4.0).abs() < 1e-12);

        let p = line_problem(-1.0, 1.0, 9, c, Arc::new(|x| 0.5 * x[0] * x[0]), Arc::new(|x| 0.5 * x[0] * x[0]));
        let rep = validate_data(&p).unwrap();
        assert!(rep.hypothesis_one());
        assert!(rep.endpoints[1].lower_margin.abs() < 1e-12);

        let p = line_problem(-1.0, 1.0, 9, 0.0, Arc::new(|x| x[0].ln()), Arc::new(|_| 0.0));
        assert!(matches!(validate_data(&p), Err(SolverError::NonFiniteData { endpoint: 0, .. })));
    }

    #[test]
    fn initial_guess_formulas() {
        let phi: ScalarField = Arc::new(|x| x[0] * x[0]);
        let p = line_problem(0.0, 1.0, 5, 0.0, phi.clone(), phi.clone());
        let lin = initial_guess(&p, &SolverParams::default());
        let per = initial_guess(
            &p,
            &SolverParams {
                init_mode: InitMode::PerronSubsolution,
                ..Default::default()
            },
        );
        let g = p.grid();
        for idx in 0..g.len() {
            let pt = g.point(idx);
            let f = pt[1] * pt[1];
            assert!((lin.get(idx) - f).abs() < 1e-15);
            if g.class(idx) == NodeClass::Interior {
                let want = (f - pt[0]).max(f - (1.0 - pt[0]));
                assert!((per.get(idx) - want).abs() < 1e-15);
            } else {
                assert_eq!(per.get(idx), f);
            }
        }
    }

    #[test]
    fn tx_exact_solution() {
        let p = line_problem(-1.0, 1.0, 17, 0.0, Arc::new(|_| 0.0), Arc::new(|x| 0.3 * x[0]));
        let rep = solve(&p, &SolverParams::default()).unwrap();
        assert!(rep.converged);
        let g = p.grid();
        let exact = GridFunction::from_fn(g, |q| 0.3 * q[0] * q[1]);
        assert!(rep.solution.max_abs_diff(&exact) < 1e-12);
        assert_eq!(rep.stats.max_abs_dev, rep.residual);
    }

    #[test]
    fn relaxes_perturbed_start() {
        let p = line_problem(1.0, 2.0, 9, 0.0, Arc::new(|_| 0.0), Arc::new(|x| 0.2 * x[0] * x[0]));
        let g = p.grid();
        let exact = GridFunction::from_fn(g, |q| 0.2 * q[0] * q[1] * q[1]);
        let start = GridFunction::from_fn(g, |q| 0.2 * q[0] * q[1] * q[1] + 0.05 * (PI * q[0]).sin() * (PI * (q[1] - 1.0)).sin());
        let params = SolverParams {
            tol_res: 1e-10,
            ..Default::default()
        };
        let rep = solve_from(&p, &params, start).unwrap();
        assert!(rep.converged, "residual {}", rep.residual);
        assert!(rep.solution.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn exact_start_needs_no_sweeps() {
        let p = line_problem(-1.0, 1.0, 9, 0.0, Arc::new(|_| 0.0), Arc::new(|x| 0.3 * x[0]));
        let params = SolverParams {
            max_iter: 3,
            ..Default::default()
        };
        let rep = solve(&p, &params).unwrap();
        assert!(rep.converged);
        assert!(rep.residual_history.len() <= 4);
    }
}
