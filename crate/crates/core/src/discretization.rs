//! Tensor grids on `[0,1] x D`, finite-difference jets and the discrete
//! Riemannian space-time Hessian in frame components.
//!
//! Nodes are stored time-major: `index = t_index * n_spatial + s`, with the
//! spatial index row-major in `(x1, x2, x3)` (x1 slowest).

use std::sync::Arc;

use thiserror::Error;

use crate::angle::{theta_tilde, AngleValue};
use crate::geometry::{product_with_time, ChartGeometry, Christoffel, GeometryError};
use crate::linalg::{Matrix, SymMatrix};

/// Smallest admissible `|grad rho|` on the boundary of a masked domain.
pub const RHO_MIN: f64 = 1e-8;

/// A real function of spatial (or space-time) coordinates.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("axis {axis} has {nodes} nodes; at least 3 are required")]
    Resolution { axis: usize, nodes: usize },
    #[error("spatial dimension {0} unsupported (expected 1..=3)")]
    Dimension(usize),
    #[error("bad domain: {0}")]
    Domain(String),
    #[error("defining function degenerates on the boundary (|grad rho| = {grad:e} < {min:e})")]
    MaskDegenerate { grad: f64, min: f64 },
    #[error("grid has no interior nodes")]
    EmptyInterior,
    #[error("node {0} is not interior")]
    NotInterior(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Spatial domain `D`.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box { lo, .. } => lo.len(),
            DomainSpec::Ball { center, .. } => center.len(),
        }
    }

    /// Defining function, negative inside. For a box this is the largest
    /// signed face distance; for a ball `(|x - x_c|^2 - R^2) / 2`.
    pub fn rho(&self, x: &[f64]) -> f64 {
        match self {
            DomainSpec::Box { lo, hi } => (0..lo.len())
                .map(|k| (lo[k] - x[k]).max(x[k] - hi[k]))
                .fold(f64::NEG_INFINITY, f64::max),
            DomainSpec::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                0.5 * (r2 - radius * radius)
            }
        }
    }

    /// True on `D` closure up to `tol` in the defining function.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.rho(x) <= tol
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Box { lo, hi } => (lo.clone(), hi.clone()),
            DomainSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    fn validate(&self) -> Result<(), DiscretizationError> {
        let n = self.dim();
        if !(1..=3).contains(&n) {
            return Err(DiscretizationError::Dimension(n));
        }
        match self {
            DomainSpec::Box { lo, hi } => {
                if hi.len() != n {
                    return Err(DiscretizationError::Domain("box bounds differ in length".into()));
                }
                for k in 0..n {
                    if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                        return Err(DiscretizationError::Domain(format!(
                            "empty box along axis {k}: [{}, {}]",
                            lo[k], hi[k]
                        )));
                    }
                }
            }
            DomainSpec::Ball { center, radius } => {
                if !center.iter().all(|c| c.is_finite()) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(DiscretizationError::Domain(format!("bad ball radius {radius}")));
                }
                // |grad rho| = |x - x_c| = R on the sphere
                if *radius < RHO_MIN {
                    return Err(DiscretizationError::MaskDegenerate {
                        grad: *radius,
                        min: RHO_MIN,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    FaceT0,
    FaceT1,
    Side,
    Corner,
    Exterior,
}

impl NodeClass {
    /// Nodes carrying Dirichlet data.
    pub fn is_boundary(self) -> bool {
        matches!(self, NodeClass::FaceT0 | NodeClass::FaceT1 | NodeClass::Side | NodeClass::Corner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialClass {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone)]
pub struct SpaceTimeGrid {
    domain: DomainSpec,
    nt: usize,
    counts: Vec<usize>,
    strides: Vec<usize>,
    lo: Vec<f64>,
    spacing: Vec<f64>,
    spatial_class: Vec<SpatialClass>,
    data_points: Vec<Vec<f64>>,
}

pub fn build_grid(
    domain: &DomainSpec,
    nt: usize,
    counts: &[usize],
) -> Result<SpaceTimeGrid, DiscretizationError> {
    domain.validate()?;
    let n = domain.dim();
    if counts.len() != n {
        return Err(DiscretizationError::Domain(format!(
            "{} node counts given for a {n}-dimensional domain",
            counts.len()
        )));
    }
    if nt < 3 {
        return Err(DiscretizationError::Resolution { axis: 0, nodes: nt });
    }
    for (k, &c) in counts.iter().enumerate() {
        if c < 3 {
            return Err(DiscretizationError::Resolution { axis: k + 1, nodes: c });
        }
    }
    let (lo, hi) = domain.bounds();
    let spacing: Vec<f64> = (0..n).map(|k| (hi[k] - lo[k]) / (counts[k] - 1) as f64).collect();
    let mut strides = vec![1; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * counts[k + 1];
    }
    let total: usize = counts.iter().product();

    let mut grid = SpaceTimeGrid {
        domain: domain.clone(),
        nt,
        counts: counts.to_vec(),
        strides,
        lo,
        spacing,
        spatial_class: vec![SpatialClass::Outside; total],
        data_points: Vec::with_capacity(total),
    };

    match domain {
        DomainSpec::Box { .. } => {
            for s in 0..total {
                let m = grid.multi_index(s);
                let inside = (0..n).all(|k| m[k] > 0 && m[k] + 1 < counts[k]);
                grid.spatial_class[s] = if inside { SpatialClass::Inside } else { SpatialClass::Boundary };
            }
        }
        DomainSpec::Ball { .. } => {
            for s in 0..total {
                if domain.rho(&grid.x(s)) < 0.0 {
                    grid.spatial_class[s] = SpatialClass::Inside;
                }
            }
            for s in 0..total {
                if grid.spatial_class[s] == SpatialClass::Inside {
                    continue;
                }
                let touches = grid
                    .neighborhood(s)
                    .into_iter()
                    .any(|q| grid.spatial_class[q] == SpatialClass::Inside);
                if touches {
                    grid.spatial_class[s] = SpatialClass::Boundary;
                }
            }
        }
    }
    for s in 0..total {
        let p = match grid.spatial_class[s] {
            SpatialClass::Boundary if matches!(domain, DomainSpec::Ball { .. }) => grid.snap_to_sphere(s),
            _ => grid.x(s),
        };
        grid.data_points.push(p);
    }
    if !grid.spatial_class.contains(&SpatialClass::Inside) {
        return Err(DiscretizationError::EmptyInterior);
    }
    Ok(grid)
}

impl SpaceTimeGrid {
    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.nt - 1) as f64
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Smallest spacing over time and space.
    pub fn h_min(&self) -> f64 {
        self.spacing.iter().fold(self.dt(), |m, &h| m.min(h))
    }

    pub fn n_spatial(&self) -> usize {
        self.spatial_class.len()
    }

    pub fn len(&self) -> usize {
        self.nt * self.n_spatial()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ti: usize, s: usize) -> usize {
        ti * self.n_spatial() + s
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_spatial(), idx % self.n_spatial())
    }

    pub fn multi_index(&self, s: usize) -> Vec<usize> {
        (0..self.n()).map(|k| (s / self.strides[k]) % self.counts[k]).collect()
    }

    pub fn spatial_index(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    pub fn t(&self, ti: usize) -> f64 {
        if ti + 1 == self.nt {
            1.0
        } else {
            ti as f64 * self.dt()
        }
    }

    pub fn x(&self, s: usize) -> Vec<f64> {
        let m = self.multi_index(s);
        (0..self.n())
            .map(|k| {
                if m[k] + 1 == self.counts[k] {
                    self.lo[k] + (self.counts[k] - 1) as f64 * self.spacing[k]
                } else {
                    self.lo[k] + m[k] as f64 * self.spacing[k]
                }
            })
            .collect()
    }

    /// Space-time coordinates `(t, x1, ..)` of a node.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let (ti, s) = self.split(idx);
        let mut p = Vec::with_capacity(self.n() + 1);
        p.push(self.t(ti));
        p.extend(self.x(s));
        p
    }

    /// Point of `D` closure where Dirichlet data for this spatial node is read.
    pub fn data_point(&self, s: usize) -> &[f64] {
        &self.data_points[s]
    }

    pub fn spatial_class(&self, s: usize) -> SpatialClass {
        self.spatial_class[s]
    }

    pub fn class(&self, idx: usize) -> NodeClass {
        let (ti, s) = self.split(idx);
        let edge = ti == 0 || ti + 1 == self.nt;
        match (self.spatial_class[s], edge) {
            (SpatialClass::Outside, _) => NodeClass::Exterior,
            (SpatialClass::Boundary, true) => NodeClass::Corner,
            (SpatialClass::Boundary, false) => NodeClass::Side,
            (SpatialClass::Inside, false) => NodeClass::Interior,
            (SpatialClass::Inside, true) if ti == 0 => NodeClass::FaceT0,
            (SpatialClass::Inside, true) => NodeClass::FaceT1,
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.class(i) == NodeClass::Interior)
    }

    pub fn inside_spatial(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_spatial()).filter(move |&s| self.spatial_class[s] == SpatialClass::Inside)
    }

    /// Spatial neighbour along `axis` at offset `+-1`.
    pub fn neighbor(&self, s: usize, axis: usize, offset: isize) -> Option<usize> {
        let m = (s / self.strides[axis]) % self.counts[axis];
        let target = m as isize + offset;
        if target < 0 || target as usize >= self.counts[axis] {
            return None;
        }
        Some((s as isize + offset * self.strides[axis] as isize) as usize)
    }

    /// All spatial nodes in the `3^n` block around `s`, excluding `s`.
    fn neighborhood(&self, s: usize) -> Vec<usize> {
        let n = self.n();
        let mut out = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let mut q = Some(s);
            let mut zero = true;
            for axis in 0..n {
                let off = (c % 3) as isize - 1;
                c /= 3;
                if off != 0 {
                    zero = false;
                    q = q.and_then(|q| self.neighbor(q, axis, off));
                }
            }
            if let (Some(q), false) = (q, zero) {
                out.push(q);
            }
        }
        out
    }

    /// Nearest crossing of the sphere along a grid line towards an inside
    /// neighbour; radial projection when only diagonal neighbours are inside.
    fn snap_to_sphere(&self, s: usize) -> Vec<f64> {
        let DomainSpec::Ball { center, radius } = &self.domain else {
            return self.x(s);
        };
        let p = self.x(s);
        let rel: Vec<f64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
        let c0: f64 = rel.iter().map(|v| v * v).sum::<f64>() - radius * radius;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for axis in 0..self.n() {
            for off in [-1isize, 1] {
                let Some(q) = self.neighbor(s, axis, off) else { continue };
                if self.spatial_class[q] != SpatialClass::Inside {
                    continue;
                }
                let d = off as f64 * self.spacing[axis];
                // |rel + lambda d e_axis|^2 = R^2; smaller root in [0, 1]
                let a = d * d;
                let b = rel[axis] * d;
                let disc = (b * b - a * c0).max(0.0);
                let lambda = ((-b - disc.sqrt()) / a).clamp(0.0, 1.0);
                let dist = lambda * d.abs();
                if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                    let mut pt = p.clone();
                    pt[axis] += lambda * d;
                    best = Some((dist, pt));
                }
            }
        }
        match best {
            Some((_, pt)) => pt,
            None => {
                let norm = (c0 + radius * radius).sqrt();
                center.iter().zip(&rel).map(|(c, r)| c + radius * r / norm).collect()
            }
        }
    }
}

/// Nodal values aligned with a grid; exterior nodes hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(grid: &SpaceTimeGrid, v: f64) -> Self {
        Self::from_fn(grid, |_| v)
    }

    /// Samples `f(t, x1, ..)` at every non-exterior node.
    pub fn from_fn(grid: &SpaceTimeGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| if grid.class(i) == NodeClass::Exterior { f64::NAN } else { f(&grid.point(i)) })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values of time slice `ti`, indexed by spatial node.
    pub fn slice<'a>(&'a self, grid: &SpaceTimeGrid, ti: usize) -> &'a [f64] {
        let ns = grid.n_spatial();
        &self.values[ti * ns..(ti + 1) * ns]
    }

    /// Sup-norm of the difference over nodes where both values are finite.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// 2-jet at a node: value, gradient and Hessian (frame components where noted).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

/// Central-difference Du and D^2u in coordinates `(t, x1, ..)`.
pub fn coordinate_jet(
    grid: &SpaceTimeGrid,
    u: &GridFunction,
    idx: usize,
) -> Result<(Vec<f64>, SymMatrix), DiscretizationError> {
    if grid.class(idx) != NodeClass::Interior {
        return Err(DiscretizationError::NotInterior(idx));
    }
    let ns = grid.n_spatial();
    let n = grid.n();
    let mut steps = Vec::with_capacity(n + 1);
    steps.push((ns as isize, grid.dt()));
    let (_, s) = grid.split(idx);
    for k in 0..n {
        let stride = grid.neighbor(s, k, 1).expect("interior node has neighbours") - s;
        steps.push((stride as isize, grid.spacing[k]));
    }
    Ok(central_jet(u.values(), idx, &steps))
}

fn central_jet(v: &[f64], idx: usize, steps: &[(isize, f64)]) -> (Vec<f64>, SymMatrix) {
    let at = |off: isize| v[(idx as isize + off) as usize];
    let d = steps.len();
    let u0 = at(0);
    let mut grad = vec![0.0; d];
    let mut hess = SymMatrix::zeros(d);
    for i in 0..d {
        let (si, hi) = steps[i];
        let up = at(si);
        let um = at(-si);
        grad[i] = (up - um) / (2.0 * hi);
        hess.set(i, i, (up - 2.0 * u0 + um) / (hi * hi));
        for j in (i + 1)..d {
            let (sj, hj) = steps[j];
            let pp = at(si + sj);
            let pm = at(si - sj);
            let mp = at(-si + sj);
            let mm = at(-si - sj);
            hess.set(i, j, (pp - pm - mp + mm) / (4.0 * hi * hj));
        }
    }
    (grad, hess)
}

/// Central-difference spatial jet of slice values at an inside spatial node.
pub fn spatial_coordinate_jet(
    grid: &SpaceTimeGrid,
    slice: &[f64],
    s: usize,
) -> Result<(Vec<f64>, SymMatrix), DiscretizationError> {
    if grid.spatial_class(s) != SpatialClass::Inside {
        return Err(DiscretizationError::NotInterior(s));
    }
    let steps: Vec<(isize, f64)> = (0..grid.n())
        .map(|k| {
            let stride = grid.neighbor(s, k, 1).expect("inside node has neighbours") - s;
            (stride as isize, grid.spacing[k])
        })
        .collect();
    Ok(central_jet(slice, s, &steps))
}

/// Discrete Riemannian space-time Hessian `hb (Db^2 u - Gb(Db u)) hb^T`, with
/// `geom_bar` the product geometry on `R x M`.
pub fn riemannian_spacetime_hessian(
    grid: &SpaceTimeGrid,
    u: &GridFunction,
    idx: usize,
    geom_bar: &dyn ChartGeometry,
) -> Result<SymMatrix, DiscretizationError> {
    let (grad, d2) = coordinate_jet(grid, u, idx)?;
    Ok(geom_bar.frame_hessian(&grid.point(idx), &grad, &d2)?)
}

/// Frame factors and Christoffel symbols of `R x M` cached per inside spatial node.
#[derive(Debug, Clone)]
pub struct FrameCache {
    frames: Vec<Option<(Matrix, Christoffel)>>,
    spatial: Vec<Option<(Matrix, Christoffel)>>,
}

impl FrameCache {
    pub fn new(grid: &SpaceTimeGrid, geom: Arc<dyn ChartGeometry>) -> Result<Self, DiscretizationError> {
        if geom.dim() != grid.n() {
            return Err(DiscretizationError::Domain(format!(
                "geometry dimension {} does not match grid dimension {}",
                geom.dim(),
                grid.n()
            )));
        }
        let bar = product_with_time(geom.clone());
        let mut frames = vec![None; grid.n_spatial()];
        let mut spatial = vec![None; grid.n_spatial()];
        for s in grid.inside_spatial() {
            let x = grid.x(s);
            let mut p = vec![0.0];
            p.extend_from_slice(&x);
            frames[s] = Some((bar.frame_at(&p)?, bar.christoffel_at(&p)?));
            spatial[s] = Some((geom.frame_at(&x)?, geom.christoffel_at(&x)?));
        }
        Ok(Self { frames, spatial })
    }

    /// Space-time frame Hessian at an interior node.
    pub fn hessian(&self, grid: &SpaceTimeGrid, u: &GridFunction, idx: usize) -> Result<SymMatrix, DiscretizationError> {
        let (grad, d2) = coordinate_jet(grid, u, idx)?;
        let (_, s) = grid.split(idx);
        let (h, gamma) = self.frames[s].as_ref().ok_or(DiscretizationError::NotInterior(idx))?;
        Ok((d2 - gamma.contract(&grad)).congruence(h))
    }

    /// Spatial frame Hessian `Hess_x f(e, e)` of slice values at an inside node.
    pub fn spatial_hessian(&self, grid: &SpaceTimeGrid, slice: &[f64], s: usize) -> Result<SymMatrix, DiscretizationError> {
        let (grad, d2) = spatial_coordinate_jet(grid, slice, s)?;
        let (h, gamma) = self.spatial[s].as_ref().ok_or(DiscretizationError::NotInterior(s))?;
        Ok((d2 - gamma.contract(&grad)).congruence(h))
    }

    /// Space-time frame factor `diag(1, h)` at an inside spatial node.
    pub fn spacetime_frame(&self, s: usize) -> Option<&Matrix> {
        self.frames[s].as_ref().map(|(h, _)| h)
    }

    /// Spatial frame factor at an inside node.
    pub fn spatial_frame(&self, s: usize) -> Option<&Matrix> {
        self.spatial[s].as_ref().map(|(h, _)| h)
    }
}

/// Extended angle at every interior node; `None` elsewhere.
pub fn angle_values(
    grid: &SpaceTimeGrid,
    u: &GridFunction,
    frames: &FrameCache,
    tol_s: f64,
) -> Vec<Option<AngleValue>> {
    (0..grid.len())
        .map(|i| {
            if grid.class(i) != NodeClass::Interior {
                return None;
            }
            frames.hessian(grid, u, i).ok().map(|a| theta_tilde(&a, tol_s))
        })
        .collect()
}

/// Field of extended angle values; NaN off the interior.
pub fn angle_field(grid: &SpaceTimeGrid, u: &GridFunction, frames: &FrameCache, tol_s: f64) -> GridFunction {
    GridFunction::new(
        angle_values(grid, u, frames, tol_s)
            .into_iter()
            .map(|v| v.map_or(f64::NAN, |a| a.value))
            .collect(),
    )
}
