use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sldsl_core::geometry::{christoffel_from_metric, RotatedFrame};
use sldsl_core::linalg::random_orthogonal;
use sldsl_core::{
    euclidean, hyperbolic_half_plane, product_with_time, semi_flat_from_potential, ChartBox, ChartGeometry, Expr,
    ExprPotential, SymMatrix,
};

/// `y^2 / (2x) + x^3 / 6` has `det Hess = 1` on `x > 0`.
const SEMI_FLAT: &str = "x2^2/(2*x1) + x1^3/6";

fn semi_flat() -> sldsl_core::SemiFlatBase {
    let chart = ChartBox::new(vec![0.5, -0.5], vec![1.5, 0.5]);
    let phi = Arc::new(ExprPotential::parse(SEMI_FLAT, 2).unwrap());
    semi_flat_from_potential(phi, chart, 1e-10).unwrap()
}

fn geometries() -> Vec<(Arc<dyn ChartGeometry>, [f64; 2], [f64; 2])> {
    vec![
        (Arc::new(euclidean(2)), [-2.0, -2.0], [2.0, 2.0]),
        (Arc::new(hyperbolic_half_plane()), [-2.0, 0.5], [2.0, 3.0]),
        (Arc::new(semi_flat()), [0.5, -0.5], [1.5, 0.5]),
        (
            Arc::new(RotatedFrame::new(Arc::new(hyperbolic_half_plane()), random_orthogonal(4, 2))),
            [-2.0, 0.5],
            [2.0, 3.0],
        ),
    ]
}

#[test]
fn frames_orthonormalize_the_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (geom, lo, hi) in geometries() {
        for _ in 0..100 {
            let x = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
            let g = geom.metric_at(&x).unwrap();
            let h = geom.frame_at(&x).unwrap();
            let e = (g.congruence(&h) - SymMatrix::identity(2)).max_abs();
            assert!(e <= 1e-10, "{} at {x:?}: {e:e}", geom.label());
        }
    }
}

#[test]
fn christoffels_match_finite_difference_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (geom, lo, hi) in geometries() {
        for _ in 0..100 {
            let x = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
            let oracle = christoffel_from_metric(|p| geom.metric_at(p), &x, 1e-4).unwrap();
            let got = geom.christoffel_at(&x).unwrap();
            let e = got.max_abs_diff(&oracle);
            assert!(e <= 1e-6, "{} at {x:?}: {e:e}", geom.label());
        }
    }
}

#[test]
fn semi_flat_christoffels_match_third_derivatives() {
    // On a Hessian metric, Gamma^k_ij = g^{kl} phi_ijl / 2.
    let base = semi_flat();
    let phi = Expr::parse(SEMI_FLAT).unwrap();
    let third = |i: usize, j: usize, l: usize, x: &[f64]| phi.derivative(i).derivative(j).derivative(l).eval(x);
    let pot = base.potential().clone();
    for x in [[0.7, 0.1], [1.2, -0.3], [1.0, 0.45]] {
        let g = pot.hessian(&x).to_matrix();
        let gamma = base.christoffel_at(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let lowered: Vec<f64> = (0..2).map(|l| 0.5 * third(i, j, l, &x)).collect();
                let raised = g.solve(&lowered).unwrap();
                for k in 0..2 {
                    assert!((gamma.get(k, i, j) - raised[k]).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn metric_compatibility_of_hyperbolic_connection() {
    // d_k g_ij = g_lj Gamma^l_ki + g_il Gamma^l_kj
    let geom = hyperbolic_half_plane();
    let x = [0.3, 1.4];
    let gamma = geom.christoffel_at(&x).unwrap();
    let g = geom.metric_at(&x).unwrap();
    let step = 1e-5;
    for k in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[k] += step;
        xm[k] -= step;
        let dg = (geom.metric_at(&xp).unwrap() - geom.metric_at(&xm).unwrap()).scale(0.5 / step);
        for i in 0..2 {
            for j in 0..2 {
                let rhs: f64 = (0..2)
                    .map(|l| g.get(l, j) * gamma.get(l, k, i) + g.get(i, l) * gamma.get(l, k, j))
                    .sum();
                assert!((dg.get(i, j) - rhs).abs() < 1e-8);
            }
        }
    }
}

proptest! {
    #[test]
    fn product_hessian_of_affine_in_time(a in -3.0f64..3.0, x in -1.0f64..1.0, y in 0.5f64..2.0) {
        // u = a t + w(x, y) with w = sin(x) y^2
        let bar = product_with_time(Arc::new(hyperbolic_half_plane()));
        let grad = vec![a, x.cos() * y * y, 2.0 * x.sin() * y];
        let coord = SymMatrix::from_rows(&[
            &[0.0, 0.0, 0.0],
            &[0.0, -x.sin() * y * y, 2.0 * x.cos() * y],
            &[0.0, 2.0 * x.cos() * y, 2.0 * x.sin()],
        ]);
        let hess = bar.frame_hessian(&[0.4, x, y], &grad, &coord).unwrap();
        for j in 0..3 {
            prop_assert!(hess.get(0, j).abs() <= 1e-14);
        }
    }
}
