mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sldsl_core::linalg::{
    complex_eigenvalues, frame_factor, random_spd, random_symmetric, sym_eigenvalues, CMatrix, Matrix,
};
use sldsl_core::SymMatrix;

fn random_complex(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Greedy nearest matching; returns the worst matched distance.
fn match_multisets(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eigenvalues_sum_to_trace_and_multiply_to_det(seed in any::<u64>(), dim in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_symmetric(&mut rng, dim, 2.0);
        let ev = sym_eigenvalues(&s);
        let sum: f64 = ev.iter().sum();
        let prod: f64 = ev.iter().product();
        prop_assert!((sum - s.trace()).abs() <= 1e-10);
        let det = s.det();
        prop_assert!((prod - det).abs() <= 1e-9 * det.abs().max(1e-3));
    }

    #[test]
    fn conjugate_matrix_has_conjugate_spectrum(seed in any::<u64>(), dim in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_complex(&mut rng, dim);
        let ev = complex_eigenvalues(&m).unwrap().eigenvalues;
        let evc = complex_eigenvalues(&m.conj()).unwrap().eigenvalues;
        let conj: Vec<Complex64> = ev.iter().map(|z| z.conj()).collect();
        prop_assert!(match_multisets(&conj, &evc) <= 1e-9);
    }

    #[test]
    fn spectrum_matches_characteristic_polynomial_roots(seed in any::<u64>(), dim in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_complex(&mut rng, dim);
        let rows: Vec<Vec<Complex64>> = (0..dim).map(|i| (0..dim).map(|j| m.get(i, j)).collect()).collect();
        let oracle = common::durand_kerner(&common::char_poly(&rows));
        let ev = complex_eigenvalues(&m).unwrap().eigenvalues;
        prop_assert!(match_multisets(&ev, &oracle) <= 1e-8);
    }

    #[test]
    fn frame_factor_orthonormalizes(seed in any::<u64>(), dim in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_spd(&mut rng, dim, 0.1);
        let h = frame_factor(&g).unwrap();
        let hg = g.congruence(&h);
        prop_assert!((hg - SymMatrix::identity(dim)).max_abs() <= 1e-12, "{hg:?}");
        let lower = (0..dim).all(|i| (i + 1..dim).all(|j| h.get(i, j) == 0.0));
        prop_assert!(lower);
    }
}

#[test]
fn hermitian_spectrum_is_real() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for dim in 1..=4 {
        let s = random_symmetric(&mut rng, dim, 1.0);
        let m = CMatrix::from_fn(dim, |i, j| Complex64::new(s.get(i, j), 0.0));
        let mut ev: Vec<f64> = complex_eigenvalues(&m).unwrap().eigenvalues.iter().map(|z| {
            assert!(z.im.abs() < 1e-10);
            z.re
        }).collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(sym_eigenvalues(&s)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn permutation_congruence_preserves_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = random_symmetric(&mut rng, 3, 1.0);
    let p = Matrix::from_fn(3, |i, j| if (i + 1) % 3 == j { 1.0 } else { 0.0 });
    let a = sym_eigenvalues(&s);
    let b = sym_eigenvalues(&s.congruence(&p));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}
