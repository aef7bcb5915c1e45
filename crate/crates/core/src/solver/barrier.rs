//! Barrier diagnostics `beta(x) = lambda + C (rho(x) - eps |x - x0|^2 / 2)`
//! near a boundary point, tested against the spatial subequation at level
//! `c - pi/2`.

use std::f64::consts::FRAC_PI_2;

use crate::angle::sl_angle;
use crate::discretization::DomainSpec;
use crate::geometry::ChartGeometry;
use crate::linalg::SymMatrix;

use super::SolverError;

/// Distance to `rho = 0` accepted as "on the boundary".
const ON_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub lambda: f64,
    pub eps: f64,
    /// Radius of the probed neighbourhood `B(x0, r)`.
    pub radius: f64,
    pub c_start: f64,
    pub growth: f64,
    pub c_max: f64,
    pub samples_per_axis: usize,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            eps: 0.5,
            radius: 0.25,
            c_start: 1e-2,
            growth: 2.0,
            c_max: 1e3,
            samples_per_axis: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSample {
    pub big_c: f64,
    /// `min (tr arctan Hess beta(e, e) - (c - pi/2))` over the sampled points.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub x0: Vec<f64>,
    pub level: f64,
    pub points: usize,
    pub schedule: Vec<BarrierSample>,
    /// Smallest schedule value from which every larger value has positive margin.
    pub admissible_c: Option<f64>,
}

impl BarrierReport {
    pub fn succeeded(&self) -> bool {
        self.admissible_c.is_some()
    }
}

/// Local defining function at `x0`: value, gradient and coordinate Hessian.
#[allow(clippy::type_complexity)]
fn local_rho(domain: &DomainSpec, x0: &[f64]) -> Result<Box<dyn Fn(&[f64]) -> (Vec<f64>, SymMatrix)>, SolverError> {
    let n = domain.dim();
    if domain.rho(x0).abs() > ON_BOUNDARY_TOL {
        return Err(SolverError::Params(format!(
            "x0 = {x0:?} is not on the boundary (rho = {:e})",
            domain.rho(x0)
        )));
    }
    match domain {
        DomainSpec::Ball { center, .. } => {
            let center = center.clone();
            Ok(Box::new(move |x: &[f64]| {
                let grad = x.iter().zip(&center).map(|(a, b)| a - b).collect();
                (grad, SymMatrix::identity(n))
            }))
        }
        DomainSpec::Box { lo, hi } => {
            let face = (0..n)
                .flat_map(|k| [(k, -1.0, (x0[k] - lo[k]).abs()), (k, 1.0, (x0[k] - hi[k]).abs())])
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .expect("n >= 1");
            let (k, sign, _) = face;
            Ok(Box::new(move |_x: &[f64]| {
                let mut grad = vec![0.0; n];
                grad[k] = sign;
                (grad, SymMatrix::zeros(n))
            }))
        }
    }
}

/// Sweeps `C` over `c_start * growth^j <= c_max`, recording the worst
/// margin of `Hess beta(e, e)` in `F_{c - pi/2}` over `B(x0, r)` in `D`.
pub fn barrier_probe(
    domain: &DomainSpec,
    geom: &dyn ChartGeometry,
    x0: &[f64],
    c: f64,
    params: &BarrierParams,
) -> Result<BarrierReport, SolverError> {
    let n = domain.dim();
    if x0.len() != n || geom.dim() != n {
        return Err(SolverError::Mismatch("x0, domain and geometry dimensions differ".into()));
    }
    if !(params.eps > 0.0) {
        return Err(SolverError::Params(format!("eps must be positive, got {}", params.eps)));
    }
    if !(params.c_start > 0.0 && params.growth > 1.0 && params.c_max >= params.c_start) {
        return Err(SolverError::Params("barrier schedule needs 0 < c_start <= c_max and growth > 1".into()));
    }
    if !(params.radius > 0.0) || params.samples_per_axis < 2 {
        return Err(SolverError::Params("barrier neighbourhood needs r > 0 and 2+ samples per axis".into()));
    }
    let rho = local_rho(domain, x0)?;
    let level = c - FRAC_PI_2;

    let m = params.samples_per_axis;
    let mut points = Vec::new();
    for code in 0..m.pow(n as u32) {
        let mut rem = code;
        let mut p = vec![0.0; n];
        for (k, pk) in p.iter_mut().enumerate() {
            let i = rem % m;
            rem /= m;
            *pk = x0[k] - params.radius + 2.0 * params.radius * i as f64 / (m - 1) as f64;
        }
        let d2: f64 = p.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 <= params.radius * params.radius && domain.contains(&p, ON_BOUNDARY_TOL) {
            points.push(p);
        }
    }
    // Frame Hessians of rho and of |x - x0|^2 / 2 are linear in C.
    let mut pieces = Vec::with_capacity(points.len());
    for p in &points {
        let (grad_rho, hess_rho) = rho(p);
        let grad_q: Vec<f64> = p.iter().zip(x0).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = grad_rho.iter().zip(&grad_q).map(|(a, b)| a - params.eps * b).collect();
        let hess = hess_rho - SymMatrix::identity(n).scale(params.eps);
        let unit = geom
            .frame_hessian(p, &grad, &hess)
            .map_err(|e| SolverError::Discretization(e.into()))?;
        pieces.push(unit);
    }

    let mut schedule = Vec::new();
    let mut big_c = params.c_start;
    while big_c <= params.c_max * (1.0 + 1e-12) {
        let min_margin = pieces
            .iter()
            .map(|unit| sl_angle(&unit.scale(big_c)) - level)
            .fold(f64::INFINITY, f64::min);
        schedule.push(BarrierSample { big_c, min_margin });
        big_c *= params.growth;
    }
    let mut admissible_c = None;
    for s in schedule.iter().rev() {
        if s.min_margin > 0.0 {
            admissible_c = Some(s.big_c);
        } else {
            break;
        }
    }
    Ok(BarrierReport {
        x0: x0.to_vec(),
        level,
        points: points.len(),
        schedule,
        admissible_c,
    })
}
