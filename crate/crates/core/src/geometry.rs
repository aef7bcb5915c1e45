//! Single-chart Riemannian geometry: metric, Christoffel symbols and an
//! orthonormal frame `e = h d/dx` with `h g h^T = I`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::Expr;
use crate::linalg::{cholesky, frame_factor, LinalgError, Matrix, SymMatrix};

/// Largest supported geometry dimension (spatial dimension plus time).
pub const MAX_GEOM_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {x:?} is outside the chart: {reason}")]
    Domain { x: Vec<f64>, reason: String },
    #[error("potential is not convex at {at:?} (pivot {pivot} = {value:e})")]
    NotConvex { at: Vec<f64>, pivot: usize, value: f64 },
    #[error("Monge-Ampere residual {max_dev:e} at {at:?} exceeds tolerance {tol:e}")]
    MongeAmpere { max_dev: f64, at: Vec<f64>, tol: f64 },
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Christoffel symbols `Gamma^k_ij`, symmetric in `i, j`.
#[derive(Clone, Copy, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: [f64; MAX_GEOM_DIM * MAX_GEOM_DIM * MAX_GEOM_DIM],
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_GEOM_DIM).contains(&dim));
        Self {
            dim,
            data: [0.0; MAX_GEOM_DIM * MAX_GEOM_DIM * MAX_GEOM_DIM],
        }
    }

    #[inline]
    fn idx(k: usize, i: usize, j: usize) -> usize {
        (k * MAX_GEOM_DIM + i) * MAX_GEOM_DIM + j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[Self::idx(k, i, j)]
    }

    /// Sets `Gamma^k_ij` and `Gamma^k_ji`.
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[Self::idx(k, i, j)] = v;
        self.data[Self::idx(k, j, i)] = v;
    }

    /// `(Gamma(p))_ij = sum_k Gamma^k_ij p_k`.
    pub fn contract(&self, p: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.get(k, i, j) * p[k]).sum()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl fmt::Debug for Christoffel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in i..self.dim {
                    let v = self.get(k, i, j);
                    if v != 0.0 {
                        list.entry(&(k, i, j, v));
                    }
                }
            }
        }
        list.finish()
    }
}

/// A coordinate chart carrying a Riemannian metric and an admissible frame.
pub trait ChartGeometry: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    fn metric_at(&self, x: &[f64]) -> Result<SymMatrix, GeometryError>;

    fn christoffel_at(&self, x: &[f64]) -> Result<Christoffel, GeometryError>;

    /// Frame factor `h(x)`; the default is the Cholesky choice.
    fn frame_at(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        Ok(frame_factor(&self.metric_at(x)?)?)
    }

    /// Frame components `h (D^2 u - Gamma(Du)) h^T` of the Riemannian Hessian.
    fn frame_hessian(
        &self,
        x: &[f64],
        gradient: &[f64],
        coord_hessian: &SymMatrix,
    ) -> Result<SymMatrix, GeometryError> {
        let gamma = self.christoffel_at(x)?;
        let h = self.frame_at(x)?;
        Ok((*coord_hessian - gamma.contract(gradient)).congruence(&h))
    }
}

impl fmt::Debug for dyn ChartGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChartGeometry({}, dim {})", self.label(), self.dim())
    }
}

/// Flat `R^n` with `g = I`.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    n: usize,
}

pub fn euclidean(n: usize) -> Euclidean {
    assert!((1..=MAX_GEOM_DIM).contains(&n), "dimension {n} unsupported");
    Euclidean { n }
}

impl ChartGeometry for Euclidean {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("euclidean({})", self.n)
    }

    fn metric_at(&self, _x: &[f64]) -> Result<SymMatrix, GeometryError> {
        Ok(SymMatrix::identity(self.n))
    }

    fn christoffel_at(&self, _x: &[f64]) -> Result<Christoffel, GeometryError> {
        Ok(Christoffel::zeros(self.n))
    }

    fn frame_at(&self, _x: &[f64]) -> Result<Matrix, GeometryError> {
        Ok(Matrix::identity(self.n))
    }
}

/// Upper half-plane `y > 0` with `g = (dx^2 + dy^2) / y^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HyperbolicHalfPlane;

pub fn hyperbolic_half_plane() -> HyperbolicHalfPlane {
    HyperbolicHalfPlane
}

impl HyperbolicHalfPlane {
    fn check(x: &[f64]) -> Result<f64, GeometryError> {
        let y = x[1];
        if y > 0.0 && y.is_finite() {
            Ok(y)
        } else {
            Err(GeometryError::Domain {
                x: x.to_vec(),
                reason: "half-plane requires y > 0".into(),
            })
        }
    }
}

impl ChartGeometry for HyperbolicHalfPlane {
    fn dim(&self) -> usize {
        2
    }

    fn label(&self) -> String {
        "hyperbolic_half_plane".into()
    }

    fn metric_at(&self, x: &[f64]) -> Result<SymMatrix, GeometryError> {
        let y = Self::check(x)?;
        let s = 1.0 / (y * y);
        Ok(SymMatrix::from_diag(&[s, s]))
    }

    fn christoffel_at(&self, x: &[f64]) -> Result<Christoffel, GeometryError> {
        let y = Self::check(x)?;
        let mut g = Christoffel::zeros(2);
        g.set(0, 0, 1, -1.0 / y);
        g.set(1, 0, 0, 1.0 / y);
        g.set(1, 1, 1, -1.0 / y);
        Ok(g)
    }

    fn frame_at(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        let y = Self::check(x)?;
        Ok(Matrix::from_diag(&[y, y]))
    }
}

/// `R x M` with the product metric `diag(1, g)`; coordinate 0 is time.
#[derive(Clone)]
pub struct ProductWithTime {
    inner: Arc<dyn ChartGeometry>,
}

pub fn product_with_time(geom: Arc<dyn ChartGeometry>) -> ProductWithTime {
    assert!(geom.dim() < MAX_GEOM_DIM, "product would exceed dimension {MAX_GEOM_DIM}");
    ProductWithTime { inner: geom }
}

impl ProductWithTime {
    pub fn spatial(&self) -> &Arc<dyn ChartGeometry> {
        &self.inner
    }
}

impl ChartGeometry for ProductWithTime {
    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn label(&self) -> String {
        format!("R x {}", self.inner.label())
    }

    fn metric_at(&self, x: &[f64]) -> Result<SymMatrix, GeometryError> {
        Ok(SymMatrix::bordered(1.0, &self.inner.metric_at(&x[1..])?))
    }

    fn christoffel_at(&self, x: &[f64]) -> Result<Christoffel, GeometryError> {
        let g = self.inner.christoffel_at(&x[1..])?;
        let n = self.inner.dim();
        let mut out = Christoffel::zeros(n + 1);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    out.set(k + 1, i + 1, j + 1, g.get(k, i, j));
                }
            }
        }
        Ok(out)
    }

    fn frame_at(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        Ok(Matrix::bordered_identity(&self.inner.frame_at(&x[1..])?))
    }
}

/// Same geometry with the frame replaced by `q h(x)` for a fixed orthogonal `q`.
#[derive(Clone)]
pub struct RotatedFrame {
    inner: Arc<dyn ChartGeometry>,
    q: Matrix,
}

impl RotatedFrame {
    pub fn new(inner: Arc<dyn ChartGeometry>, q: Matrix) -> Self {
        assert_eq!(q.dim(), inner.dim());
        Self { inner, q }
    }
}

impl ChartGeometry for RotatedFrame {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn label(&self) -> String {
        format!("{} (rotated frame)", self.inner.label())
    }

    fn metric_at(&self, x: &[f64]) -> Result<SymMatrix, GeometryError> {
        self.inner.metric_at(x)
    }

    fn christoffel_at(&self, x: &[f64]) -> Result<Christoffel, GeometryError> {
        self.inner.christoffel_at(x)
    }

    fn frame_at(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        Ok(self.q.mul(&self.inner.frame_at(x)?))
    }
}

/// Christoffel symbols from central differences of the metric,
/// `Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)`.
pub fn christoffel_from_metric<F>(metric: F, x: &[f64], step: f64) -> Result<Christoffel, GeometryError>
where
    F: Fn(&[f64]) -> Result<SymMatrix, GeometryError>,
{
    let n = x.len();
    let g = metric(x)?;
    // dg[l] = d_l g
    let mut dg = Vec::with_capacity(n);
    for l in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[l] += step;
        xm[l] -= step;
        let gp = metric(&xp)?;
        let gm = metric(&xm)?;
        dg.push(SymMatrix::from_fn(n, |i, j| (gp.get(i, j) - gm.get(i, j)) / (2.0 * step)));
    }
    let gm = g.to_matrix();
    let mut out = Christoffel::zeros(n);
    for i in 0..n {
        for j in i..n {
            let lowered: Vec<f64> = (0..n)
                .map(|l| 0.5 * (dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j)))
                .collect();
            let raised = gm.solve(&lowered)?;
            for (k, v) in raised.into_iter().enumerate() {
                out.set(k, i, j, v);
            }
        }
    }
    Ok(out)
}

/// Convex potential on the base with value, gradient and coordinate Hessian.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> SymMatrix;
}

/// Potential given by an expression, with symbolic derivatives.
#[derive(Debug, Clone)]
pub struct ExprPotential {
    n: usize,
    value: Expr,
    gradient: Vec<Expr>,
    hessian: Vec<Vec<Expr>>,
}

impl ExprPotential {
    pub fn new(expr: Expr, n: usize) -> Self {
        let gradient: Vec<Expr> = (0..n).map(|k| expr.derivative(k)).collect();
        let hessian = gradient
            .iter()
            .map(|g| (0..n).map(|k| g.derivative(k)).collect())
            .collect();
        Self {
            n,
            value: expr,
            gradient,
            hessian,
        }
    }

    pub fn parse(src: &str, n: usize) -> Result<Self, crate::expr::ExprError> {
        Ok(Self::new(Expr::parse(src)?, n))
    }
}

impl Potential for ExprPotential {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient.iter().map(|g| g.eval(x)).collect()
    }

    fn hessian(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| self.hessian[i][j].eval(x))
    }
}

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "empty chart box");
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn scale(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(0.0f64, |m, (a, b)| m.max(b - a))
    }

    /// Tensor lattice with `per_axis` points per axis, boundary included.
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; n];
                for ax in (0..n).rev() {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    let frac = if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
                    p[ax] = self.lo[ax] + frac * (self.hi[ax] - self.lo[ax]);
                }
                p
            })
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Semi-flat base: `g = Hess phi` for a potential solving `det Hess phi = const`.
#[derive(Clone)]
pub struct SemiFlatBase {
    potential: Arc<dyn Potential>,
    chart: ChartBox,
    ma_constant: f64,
    fd_step: f64,
}

/// Points per axis used to validate the Monge-Ampere condition.
const MA_SAMPLES_PER_AXIS: usize = 5;

pub fn semi_flat_from_potential(
    potential: Arc<dyn Potential>,
    chart: ChartBox,
    tol_ma: f64,
) -> Result<SemiFlatBase, GeometryError> {
    let n = potential.dim();
    if n != chart.dim() || !(1..MAX_GEOM_DIM).contains(&n) {
        return Err(GeometryError::Dimension(n));
    }
    let center = chart.center();
    let ma_constant = check_convex(potential.as_ref(), &center)?;
    let mut worst = (0.0f64, center.clone());
    for p in chart.lattice(MA_SAMPLES_PER_AXIS) {
        let det = check_convex(potential.as_ref(), &p)?;
        let dev = (det - ma_constant).abs();
        if dev > worst.0 {
            worst = (dev, p);
        }
    }
    if worst.0 > tol_ma {
        return Err(GeometryError::MongeAmpere {
            max_dev: worst.0,
            at: worst.1,
            tol: tol_ma,
        });
    }
    let fd_step = chart.scale() * 1e-4;
    Ok(SemiFlatBase {
        potential,
        chart,
        ma_constant,
        fd_step,
    })
}

fn check_convex(potential: &dyn Potential, x: &[f64]) -> Result<f64, GeometryError> {
    let hess = potential.hessian(x);
    match cholesky(&hess) {
        Ok(_) => Ok(hess.det()),
        Err(LinalgError::NotPositiveDefinite { pivot, value }) => Err(GeometryError::NotConvex {
            at: x.to_vec(),
            pivot,
            value,
        }),
        Err(e) => Err(e.into()),
    }
}

impl SemiFlatBase {
    pub fn ma_constant(&self) -> f64 {
        self.ma_constant
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }
}

impl ChartGeometry for SemiFlatBase {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn label(&self) -> String {
        format!("semi_flat({})", self.potential.dim())
    }

    fn metric_at(&self, x: &[f64]) -> Result<SymMatrix, GeometryError> {
        Ok(self.potential.hessian(x))
    }

    fn christoffel_at(&self, x: &[f64]) -> Result<Christoffel, GeometryError> {
        christoffel_from_metric(|p| self.metric_at(p), x, self.fd_step)
    }
}

/// Section coordinates `y = g^{-1} grad f`; on a semi-flat base `g = Hess phi`.
pub fn section_coordinates(
    geom: &dyn ChartGeometry,
    x: &[f64],
    grad_f: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    let g = geom.metric_at(x)?;
    Ok(g.to_matrix().solve(grad_f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_data() {
        let e = euclidean(1);
        assert_eq!(e.metric_at(&[0.3]).unwrap(), SymMatrix::identity(1));
        let e = euclidean(2);
        assert!(e.christoffel_at(&[1.0, 2.0]).unwrap().is_zero());
        assert_eq!(e.frame_at(&[1.0, 2.0]).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn half_plane_values() {
        let h = hyperbolic_half_plane();
        assert_eq!(h.metric_at(&[0.0, 1.0]).unwrap(), SymMatrix::identity(2));
        assert_eq!(h.frame_at(&[0.0, 1.0]).unwrap(), Matrix::identity(2));
        let g = h.metric_at(&[0.0, 2.0]).unwrap();
        assert_eq!(g, SymMatrix::from_diag(&[0.25, 0.25]));
        let gamma = h.christoffel_at(&[0.0, 2.0]).unwrap();
        assert_eq!(gamma.get(1, 0, 0), 0.5);
        assert!(h.metric_at(&[0.0, 0.0]).is_err());
        assert!(h.christoffel_at(&[0.0, -1.0]).is_err());
    }

    #[test]
    fn half_plane_hessian_of_height() {
        // u = y: coordinate Hessian zero, gradient (0, 1)
        let h = hyperbolic_half_plane();
        for y in [0.5, 1.0, 2.0, 3.5] {
            let hess = h.frame_hessian(&[0.7, y], &[0.0, 1.0], &SymMatrix::zeros(2)).unwrap();
            assert!((hess.get(0, 0) + y).abs() < 1e-14);
            assert!((hess.get(1, 1) - y).abs() < 1e-14);
            assert_eq!(hess.get(0, 1), 0.0);
            assert!(hess.trace().abs() < 1e-14);
        }
    }

    #[test]
    fn product_blocks() {
        let p = product_with_time(Arc::new(hyperbolic_half_plane()));
        let x = [0.3, 0.1, 2.0];
        assert_eq!(p.metric_at(&x).unwrap(), SymMatrix::from_diag(&[1.0, 0.25, 0.25]));
        let gamma = p.christoffel_at(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gamma.get(0, i, j), 0.0);
                assert_eq!(gamma.get(i, 0, j), 0.0);
            }
        }
        assert_eq!(gamma.get(2, 1, 1), 0.5);
        assert_eq!(p.frame_at(&x).unwrap(), Matrix::from_diag(&[1.0, 2.0, 2.0]));

        let e = product_with_time(Arc::new(euclidean(1)));
        assert_eq!(e.metric_at(&[0.0, 5.0]).unwrap(), SymMatrix::identity(2));
        assert!(e.christoffel_at(&[0.0, 5.0]).unwrap().is_zero());
    }

    #[test]
    fn semi_flat_examples() {
        let chart = ChartBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let phi = Arc::new(ExprPotential::parse("0.5*x1^2 + 0.5*x2^2", 2).unwrap());
        let base = semi_flat_from_potential(phi, chart.clone(), 1e-10).unwrap();
        assert_eq!(base.ma_constant(), 1.0);
        assert_eq!(base.metric_at(&[0.2, 0.4]).unwrap(), SymMatrix::identity(2));
        let gamma = base.christoffel_at(&[0.2, 0.4]).unwrap();
        assert!(gamma.max_abs_diff(&Christoffel::zeros(2)) < 1e-12);

        let phi = Arc::new(ExprPotential::parse("0.5*x1^2 + 0.5*x2^2 + 0.5*x1*x2", 2).unwrap());
        let base = semi_flat_from_potential(phi, chart.clone(), 1e-10).unwrap();
        assert!((base.ma_constant() - 0.75).abs() < 1e-15);
        let g = base.metric_at(&[0.0, 0.0]).unwrap();
        assert_eq!(g, SymMatrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]]));

        let chart1 = ChartBox::new(vec![0.5], vec![1.5]);
        let quartic = Arc::new(ExprPotential::parse("x1^4", 1).unwrap());
        assert!(matches!(
            semi_flat_from_potential(quartic, chart1, 1e-6),
            Err(GeometryError::MongeAmpere { .. })
        ));

        let saddle = Arc::new(ExprPotential::parse("x1^2 - x2^2", 2).unwrap());
        assert!(matches!(
            semi_flat_from_potential(saddle, chart, 1e-6),
            Err(GeometryError::NotConvex { pivot: 1, .. })
        ));
    }

    #[test]
    fn section_coordinate_examples() {
        let e = euclidean(2);
        assert_eq!(section_coordinates(&e, &[0.0, 0.0], &[0.3, -0.4]).unwrap(), vec![0.3, -0.4]);

        let chart = ChartBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let phi = Arc::new(ExprPotential::parse("x1^2 + x2^2", 2).unwrap());
        let base = semi_flat_from_potential(phi, chart, 1e-10).unwrap();
        assert_eq!(section_coordinates(&base, &[0.1, 0.1], &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn rotated_frame_stays_orthonormal() {
        let q = crate::linalg::random_orthogonal(5, 2);
        let r = RotatedFrame::new(Arc::new(hyperbolic_half_plane()), q);
        let x = [0.2, 1.7];
        let h = r.frame_at(&x).unwrap();
        let id = r.metric_at(&x).unwrap().congruence(&h);
        assert!(id.to_matrix().max_abs_diff(&Matrix::identity(2)) < 1e-12);
    }
}
