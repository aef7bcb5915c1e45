use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sldsl_core::linalg::{random_psd, random_symmetric};
use sldsl_core::subequation::{
    dsl_contains, dsl_dual_contains, dsl_interior, dsl_on_boundary, sl_contains, sl_dual_contains, DEFAULT_EPS_INT,
};
use sldsl_core::{theta_tilde, Branch, DEFAULT_TOL_S};

fn random_level(rng: &mut ChaCha8Rng, n: usize) -> Branch {
    let w = (n as f64 + 1.0) * std::f64::consts::FRAC_PI_2;
    Branch::from_level(rng.random_range(-0.95 * w..0.95 * w), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn dual_of_dual_recovers_membership(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n + 1, 2.0);
        let br = random_level(&mut rng, n);
        let margin = theta_tilde(&a, DEFAULT_TOL_S).value - br.c;
        prop_assume!(margin.abs() >= 10.0 * DEFAULT_EPS_INT);
        let eps = DEFAULT_EPS_INT;
        // A lies in the dual of the dual iff -A is not interior to the dual,
        // i.e. -A - eps I is not in the dual.
        let shifted = (-a).shift(-eps);
        let double_dual = !dsl_dual_contains(&shifted, &br, eps, DEFAULT_TOL_S);
        prop_assert_eq!(double_dual, dsl_contains(&a, &br, DEFAULT_TOL_S).contained);
    }

    #[test]
    fn sl_dual_is_the_reflected_level(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_symmetric(&mut rng, n, 2.0);
        let c = rng.random_range(-1.5 * n as f64..1.5 * n as f64);
        prop_assert_eq!(sl_dual_contains(&b, c), sl_contains(&b, -c).contained);
    }

    #[test]
    fn membership_is_monotone(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n + 1, 2.0);
        let p = random_psd(&mut rng, n + 1, 1.0);
        let br = random_level(&mut rng, n);
        if dsl_contains(&a, &br, DEFAULT_TOL_S).contained {
            prop_assert!(dsl_contains(&(a + p), &br, DEFAULT_TOL_S).contained);
        }
    }

    #[test]
    fn boundary_is_meet_with_reflected_dual(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n + 1, 2.0);
        let br = if rng.random_bool(0.5) {
            match Branch::from_level(theta_tilde(&a, DEFAULT_TOL_S).value, n) {
                Ok(b) => b,
                Err(_) => random_level(&mut rng, n),
            }
        } else {
            random_level(&mut rng, n)
        };
        let eps = DEFAULT_EPS_INT;
        let meet = dsl_contains(&a, &br, DEFAULT_TOL_S).contained && dsl_dual_contains(&(-a), &br, eps, DEFAULT_TOL_S);
        prop_assert_eq!(dsl_on_boundary(&a, &br, eps, DEFAULT_TOL_S), meet);
    }
}

#[test]
fn interior_implies_containment() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..5000 {
        let n = 1 + k % 3;
        let a = random_symmetric(&mut rng, n + 1, 2.0);
        let br = random_level(&mut rng, n);
        if dsl_interior(&a, &br, DEFAULT_EPS_INT, DEFAULT_TOL_S) {
            assert!(dsl_contains(&a, &br, DEFAULT_TOL_S).contained);
        }
    }
}
