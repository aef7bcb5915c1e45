use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sldsl_core::discretization::{angle_field, riemannian_spacetime_hessian};
use sldsl_core::geometry::RotatedFrame;
use sldsl_core::linalg::{random_orthogonal, random_symmetric};
use sldsl_core::{
    build_grid, euclidean, hyperbolic_half_plane, product_with_time, ChartGeometry, DomainSpec, FrameCache,
    GridFunction, Matrix, SymMatrix, DEFAULT_TOL_S,
};

fn half_plane_box() -> DomainSpec {
    DomainSpec::Box {
        lo: vec![-0.5, 1.0],
        hi: vec![0.5, 2.0],
    }
}

fn smooth(p: &[f64]) -> f64 {
    let (t, x, y) = (p[0], p[1], p[2]);
    x.sin() * y * y + t * x * y + t * t
}

#[test]
fn rotated_frames_conjugate_the_hessian() {
    let grid = build_grid(&half_plane_box(), 7, &[7, 7]).unwrap();
    let base: Arc<dyn ChartGeometry> = Arc::new(hyperbolic_half_plane());
    let q = random_orthogonal(17, 2);
    let rotated: Arc<dyn ChartGeometry> = Arc::new(RotatedFrame::new(base.clone(), q.clone()));
    let u = GridFunction::from_fn(&grid, smooth);
    let bar = product_with_time(base.clone());
    let bar_rot = product_with_time(rotated.clone());
    let big_q = Matrix::bordered_identity(&q);
    for idx in grid.interior_nodes() {
        let a = riemannian_spacetime_hessian(&grid, &u, idx, &bar).unwrap();
        let b = riemannian_spacetime_hessian(&grid, &u, idx, &bar_rot).unwrap();
        assert!((b - a.congruence(&big_q)).max_abs() < 1e-12);
    }
    let f1 = angle_field(&grid, &u, &FrameCache::new(&grid, base).unwrap(), DEFAULT_TOL_S);
    let f2 = angle_field(&grid, &u, &FrameCache::new(&grid, rotated).unwrap(), DEFAULT_TOL_S);
    assert!(f1.max_abs_diff(&f2) <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_quadratics_are_differentiated_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_symmetric(&mut rng, 3, 2.0);
        let grid = build_grid(&DomainSpec::Box { lo: vec![-1.0, 0.0], hi: vec![1.0, 2.0] }, 6, &[5, 7]).unwrap();
        let u = GridFunction::from_fn(&grid, |p| {
            let mut s = 0.3 * p[0] - p[2];
            for i in 0..3 {
                for j in 0..3 {
                    s += 0.5 * q.get(i, j) * p[i] * p[j];
                }
            }
            s
        });
        let frames = FrameCache::new(&grid, Arc::new(euclidean(2))).unwrap();
        for idx in grid.interior_nodes() {
            let a = frames.hessian(&grid, &u, idx).unwrap();
            prop_assert!((a - q).max_abs() <= 1e-12);
        }
    }
}

#[test]
fn curved_hessian_is_second_order() {
    let bar = product_with_time(Arc::new(hyperbolic_half_plane()));
    let (t, x, y): (f64, f64, f64) = (0.5, 0.25, 1.5);
    let grad = [x * y + 2.0 * t, x.cos() * y * y + t * y, 2.0 * x.sin() * y + t * x];
    let d2 = SymMatrix::from_rows(&[
        &[2.0, y, x],
        &[y, -x.sin() * y * y, 2.0 * x.cos() * y + t],
        &[x, 2.0 * x.cos() * y + t, 2.0 * x.sin()],
    ]);
    let exact = bar.frame_hessian(&[t, x, y], &grad, &d2).unwrap();
    let mut errors = Vec::new();
    for m in [5usize, 9, 17] {
        let grid = build_grid(&half_plane_box(), m, &[m, m]).unwrap();
        let mid = (m - 1) / 2;
        let s = grid.spatial_index(&[3 * (m - 1) / 4, mid]);
        let idx = grid.index(mid, s);
        assert_eq!(grid.point(idx), vec![t, x, y]);
        let u = GridFunction::from_fn(&grid, smooth);
        let frames = FrameCache::new(&grid, Arc::new(hyperbolic_half_plane())).unwrap();
        errors.push((frames.hessian(&grid, &u, idx).unwrap() - exact).max_abs());
    }
    for w in errors.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!(slope >= 1.8, "errors {errors:?}");
    }
}
