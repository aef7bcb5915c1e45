//! Space-time Lagrangian angle calculus and a finite-difference Dirichlet
//! solver for the Riemannian degenerate special Lagrangian equation on
//! `[0,1] x D`.

pub mod angle;
pub mod discretization;
pub mod expr;
pub mod geodesic;
pub mod geometry;
pub mod linalg;
pub mod solver;
pub mod subequation;

pub use angle::{sl_angle, theta_hat, theta_tilde, AngleError, AngleValue, DEFAULT_TOL_S};
pub use discretization::{
    build_grid, DiscretizationError, DomainSpec, FrameCache, GridFunction, NodeClass, ScalarField,
    SpaceTimeGrid,
};
pub use expr::{Expr, ExprError};
pub use geodesic::{LagrangianPath, TransportField};
pub use geometry::{
    euclidean, hyperbolic_half_plane, product_with_time, semi_flat_from_potential, ChartBox,
    ChartGeometry, Christoffel, ExprPotential, GeometryError, Potential, SemiFlatBase,
};
pub use linalg::{LinalgError, Matrix, SymMatrix};
pub use solver::{
    CertificationReport, DirichletProblem, InitMode, SolveReport, SolverError, SolverParams,
};
pub use subequation::{Branch, BranchError, MembershipVerdict};
