//! Randomized invariant suites behind `sldsl verify`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sldsl_core::angle::spacetime_operator;
use sldsl_core::geodesic::{b_matrices_from_hessian, geodesic_residual, positivity_value, sup_norm, DEFAULT_DEN_MIN};
use sldsl_core::geometry::{christoffel_from_metric, RotatedFrame};
use sldsl_core::linalg::{principal_arg, random_orthogonal, random_psd, random_symmetric, CMatrix};
use sldsl_core::solver::{perron_subsolution, solve, solve_from};
use sldsl_core::subequation::{
    dsl_contains, dsl_dual_contains, dsl_on_boundary, positivity_window, sl_contains, sl_dual_contains,
    DEFAULT_EPS_INT,
};
use sldsl_core::{
    build_grid, euclidean, hyperbolic_half_plane, semi_flat_from_potential, sl_angle, theta_tilde, Branch, ChartBox,
    ChartGeometry, DirichletProblem, DomainSpec, ExprPotential, GridFunction, Matrix, SolverParams,
    SymMatrix, DEFAULT_TOL_S,
};

use crate::CliError;

pub const SUITES: &[&str] = &["angle", "subeq", "geometry", "solver", "geodesic"];

const SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub total: usize,
    pub passed: usize,
    /// Worst observed error and the tolerance it was held to; `None` for
    /// yes/no checks.
    pub worst: Option<(f64, f64)>,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }

    pub fn line(&self) -> String {
        let mut s = format!("{}: {}/{} pass", self.name, self.passed, self.total);
        if let Some((w, tol)) = self.worst {
            s.push_str(&format!(", worst {w:.1e} (tol {tol:.0e})"));
        }
        s
    }
}

/// Collects numeric errors against one tolerance.
struct Errors {
    name: &'static str,
    tol: f64,
    total: usize,
    passed: usize,
    worst: f64,
}

impl Errors {
    fn new(name: &'static str, tol: f64) -> Self {
        Errors { name, tol, total: 0, passed: 0, worst: 0.0 }
    }

    fn push(&mut self, e: f64) {
        self.total += 1;
        if e <= self.tol {
            self.passed += 1;
        }
        if !(e <= self.worst) {
            self.worst = e;
        }
    }

    fn done(self) -> Check {
        Check {
            name: self.name.into(),
            total: self.total,
            passed: self.passed,
            worst: Some((self.worst, self.tol)),
        }
    }
}

fn flag(name: &str, results: impl IntoIterator<Item = bool>) -> Check {
    let (mut total, mut passed) = (0, 0);
    for r in results {
        total += 1;
        passed += usize::from(r);
    }
    Check { name: name.into(), total, passed, worst: None }
}

fn rng(seed: u64, suite: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_level(rng: &mut ChaCha8Rng, n: usize) -> Branch {
    let w = (n as f64 + 1.0) * FRAC_PI_2;
    Branch::from_level(rng.random_range(-0.95 * w..0.95 * w), n).expect("inside range")
}

fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

pub fn angle_suite(seed: u64, tol: Option<f64>) -> Vec<Check> {
    let mut rng = rng(seed, 1);
    let mut inv = Errors::new("O_n invariance", tol.unwrap_or(1e-9));
    let mut mono = Errors::new("PSD monotonicity", tol.unwrap_or(1e-9));
    let mut phase = Errors::new("determinant phase", tol.unwrap_or(1e-9));
    let mut limits = Errors::new("one-sided limits at S", tol.unwrap_or(1e-6));
    for k in 0..SAMPLES {
        let n = 1 + k % 3;
        let a = random_symmetric(&mut rng, n + 1, 2.0);
        let h = Matrix::bordered_identity(&random_orthogonal(rng.random(), n));
        let v = theta_tilde(&a, DEFAULT_TOL_S);
        inv.push((theta_tilde(&a.congruence(&h), DEFAULT_TOL_S).value - v.value).abs());

        let p = random_psd(&mut rng, n + 1, 1.0);
        mono.push((v.value - theta_tilde(&(a + p), DEFAULT_TOL_S).value).max(0.0));

        if !v.on_singular_set {
            let det = spacetime_operator(&a).det();
            phase.push(wrapped_distance(v.value, principal_arg(det)));
        }

        let b = random_symmetric(&mut rng, n, 2.0);
        let mut s = SymMatrix::bordered(0.0, &b);
        s.set(0, 0, 1e-9);
        limits.push((theta_tilde(&s, DEFAULT_TOL_S).value - (FRAC_PI_2 + sl_angle(&b))).abs());
    }
    vec![inv.done(), mono.done(), phase.done(), limits.done()]
}

pub fn subeq_suite(seed: u64, _tol: Option<f64>) -> Vec<Check> {
    let mut rng = rng(seed, 2);
    let eps = DEFAULT_EPS_INT;
    let (mut dd, mut refl, mut mono, mut meet) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..SAMPLES {
        let n = 1 + k % 3;
        let a = random_symmetric(&mut rng, n + 1, 2.0);
        let br = random_level(&mut rng, n);
        let contained = dsl_contains(&a, &br, DEFAULT_TOL_S).contained;
        if (theta_tilde(&a, DEFAULT_TOL_S).value - br.c).abs() >= 10.0 * eps {
            let double_dual = !dsl_dual_contains(&(-a).shift(-eps), &br, eps, DEFAULT_TOL_S);
            dd.push(double_dual == contained);
        }
        let b = random_symmetric(&mut rng, n, 2.0);
        let c = rng.random_range(-1.5 * n as f64..1.5 * n as f64);
        refl.push(sl_dual_contains(&b, c) == sl_contains(&b, -c).contained);
        if contained {
            let p = random_psd(&mut rng, n + 1, 1.0);
            mono.push(dsl_contains(&(a + p), &br, DEFAULT_TOL_S).contained);
        }
        let on = match Branch::from_level(theta_tilde(&a, DEFAULT_TOL_S).value, n) {
            Ok(b) if k % 2 == 0 => b,
            _ => br,
        };
        let m = dsl_contains(&a, &on, DEFAULT_TOL_S).contained && dsl_dual_contains(&(-a), &on, eps, DEFAULT_TOL_S);
        meet.push(dsl_on_boundary(&a, &on, eps, DEFAULT_TOL_S) == m);
    }
    vec![
        flag("dual of dual", dd),
        flag("SL dual is the reflected level", refl),
        flag("monotone under PSD", mono),
        flag("boundary is F meet reflected dual", meet),
    ]
}

/// A geometry with the sampling box for its chart.
type Sampled = (Arc<dyn ChartGeometry>, [f64; 2], [f64; 2]);

fn test_geometries() -> Result<Vec<Sampled>, CliError> {
    let phi = ExprPotential::parse("x2^2/(2*x1) + x1^3/6", 2).map_err(|e| CliError::Input(e.to_string()))?;
    let semi = semi_flat_from_potential(Arc::new(phi), ChartBox::new(vec![0.5, -0.5], vec![1.5, 0.5]), 1e-10)
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(vec![
        (Arc::new(euclidean(2)), [-2.0, -2.0], [2.0, 2.0]),
        (Arc::new(hyperbolic_half_plane()), [-2.0, 0.5], [2.0, 3.0]),
        (Arc::new(semi), [0.5, -0.5], [1.5, 0.5]),
        (
            Arc::new(RotatedFrame::new(Arc::new(hyperbolic_half_plane()), random_orthogonal(4, 2))),
            [-2.0, 0.5],
            [2.0, 3.0],
        ),
    ])
}

pub fn geometry_suite(seed: u64, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let mut rng = rng(seed, 3);
    let mut frames = Errors::new("frame orthonormality", tol.unwrap_or(1e-10));
    let mut chris = Errors::new("Christoffel vs metric differences", tol.unwrap_or(1e-6));
    let mut sym = Errors::new("Christoffel symmetry", tol.unwrap_or(1e-14));
    for (geom, lo, hi) in test_geometries()? {
        for _ in 0..SAMPLES / 4 {
            let x = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
            let err = |e: sldsl_core::GeometryError| CliError::Input(format!("{}: {e}", geom.label()));
            let g = geom.metric_at(&x).map_err(err)?;
            let h = geom.frame_at(&x).map_err(err)?;
            frames.push((g.congruence(&h) - SymMatrix::identity(2)).max_abs());
            let got = geom.christoffel_at(&x).map_err(err)?;
            let oracle = christoffel_from_metric(|p| geom.metric_at(p), &x, 1e-4).map_err(err)?;
            chris.push(got.max_abs_diff(&oracle));
            let mut asym = 0.0f64;
            for k in 0..2 {
                asym = asym.max((got.get(k, 0, 1) - got.get(k, 1, 0)).abs());
            }
            sym.push(asym);
        }
    }
    Ok(vec![frames.done(), chris.done(), sym.done()])
}

fn tx_problem(m: usize) -> Result<DirichletProblem, CliError> {
    let grid = build_grid(&DomainSpec::Box { lo: vec![-1.0], hi: vec![1.0] }, m, &[m])
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(DirichletProblem::new(
        Arc::new(euclidean(1)),
        grid,
        Branch::from_level(0.0, 1).expect("c = 0"),
        Arc::new(|_| 0.0),
        Arc::new(|x| 0.3 * x[0]),
    )?)
}

pub fn solver_suite(seed: u64, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let mut rng = rng(seed, 4);
    let params = SolverParams { tol_res: 1e-9, ..Default::default() };
    let p = tx_problem(9)?;
    let grid = p.grid();
    let exact = GridFunction::from_fn(grid, |q| 0.3 * q[0] * q[1]);

    let mut exact_err = Errors::new("exact affine-in-t solve", tol.unwrap_or(1e-8));
    exact_err.push(solve(&p, &params)?.solution.max_abs_diff(&exact));

    let mut relax = Errors::new("relaxation from perturbed starts", tol.unwrap_or(params.tol_res));
    let mut gauge = Errors::new("affine gauge", tol.unwrap_or(1e-8));
    let mut order = Errors::new("Perron subsolution below solution", tol.unwrap_or(1e-9));
    for _ in 0..3 {
        let amp = rng.random_range(0.002..0.01);
        let (ga, gb) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let bump = move |q: &[f64]| amp * (PI * q[0]).sin() * (FRAC_PI_2 * q[1]).cos();
        let r1 = solve_from(&p, &params, GridFunction::from_fn(grid, |q| 0.3 * q[0] * q[1] + bump(q)))?;
        relax.push(if r1.converged { r1.residual } else { f64::INFINITY });
        let pg = p.with_gauge(ga, gb);
        let u0 = GridFunction::from_fn(grid, |q| 0.3 * q[0] * q[1] + bump(q) + ga * q[0] + gb);
        let r2 = solve_from(&pg, &params, u0)?;
        let d = (0..grid.len())
            .map(|i| (r2.solution.get(i) - r1.solution.get(i) - ga * grid.t(grid.split(i).0) - gb).abs())
            .fold(0.0f64, f64::max);
        gauge.push(d);

        let sub = perron_subsolution(&p, rng.random_range(0.5..3.0));
        let worst = grid
            .interior_nodes()
            .map(|i| (sub.get(i) - r1.solution.get(i)).max(0.0))
            .fold(0.0f64, f64::max);
        order.push(worst);
    }
    Ok(vec![exact_err.done(), relax.done(), gauge.done(), order.done()])
}

pub fn geodesic_suite(seed: u64, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let mut rng = rng(seed, 5);
    let mut minors = Errors::new("static path minors", tol.unwrap_or(1e-12));
    let mut window = Vec::new();
    for k in 0..SAMPLES {
        let n = 1 + k % 3;
        let b = random_symmetric(&mut rng, n, 2.0);
        let bm = b_matrices_from_hessian(&SymMatrix::bordered(0.0, &b));
        let det = CMatrix::from_fn(n, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, b.get(i, j))).det();
        let off = bm.minors[1..].iter().fold(0.0f64, |m, z| m.max(z.norm()));
        minors.push(off.max((bm.minors[0] - det).norm()));

        // The two agree only away from 2 pi aliasing and the window ends.
        let br = random_level(&mut rng, n);
        let sl = sl_angle(&b);
        let value = positivity_value(&b, br.theta);
        let clear = (sl - br.c).abs() < 1.5 * PI
            && (sl - (br.c - FRAC_PI_2)).abs() >= 1e-6
            && (sl - (br.c + FRAC_PI_2)).abs() >= 1e-6
            && value.abs() >= 1e-9;
        if clear {
            window.push((value > 0.0) == positivity_window(&b, &br));
        }
    }
    let p = tx_problem(9)?;
    let u = GridFunction::from_fn(p.grid(), |q| 0.3 * q[0] * q[1]);
    let mut geo = Errors::new("geodesic residual on exact solution", tol.unwrap_or(1e-9));
    geo.push(sup_norm(&geodesic_residual(&p, &u, 0.0, DEFAULT_DEN_MIN)?));
    Ok(vec![minors.done(), flag("positivity matches window", window), geo.done()])
}

pub fn run_suite(name: &str, seed: u64, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    match name {
        "angle" => Ok(angle_suite(seed, tol)),
        "subeq" => Ok(subeq_suite(seed, tol)),
        "geometry" => geometry_suite(seed, tol),
        "solver" => solver_suite(seed, tol),
        "geodesic" => geodesic_suite(seed, tol),
        other => Err(CliError::Input(format!("unknown suite `{other}`; expected one of {SUITES:?} or all"))),
    }
}
