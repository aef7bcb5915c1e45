use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sldsl_core::angle::spacetime_operator;
use sldsl_core::linalg::{complex_eigenvalues, random_symmetric};
use sldsl_core::solver::{solve, solve_from};
use sldsl_core::*;

fn eigenvalues(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = c.benchmark_group("complex_eigenvalues");
    for dim in 2..=4 {
        let m = spacetime_operator(&random_symmetric(&mut rng, dim, 2.0));
        g.bench_with_input(BenchmarkId::from_parameter(dim), &m, |b, m| {
            b.iter(|| complex_eigenvalues(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn angles(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut g = c.benchmark_group("theta_tilde");
    for dim in 2..=4 {
        let a = random_symmetric(&mut rng, dim, 2.0);
        g.bench_with_input(BenchmarkId::new("generic", dim), &a, |b, a| {
            b.iter(|| theta_tilde(black_box(a), DEFAULT_TOL_S))
        });
        let s = SymMatrix::bordered(0.0, &random_symmetric(&mut rng, dim - 1, 2.0));
        g.bench_with_input(BenchmarkId::new("singular_set", dim), &s, |b, s| {
            b.iter(|| theta_tilde(black_box(s), DEFAULT_TOL_S))
        });
    }
    g.finish();
}

fn line_problem(m: usize) -> DirichletProblem {
    let grid = build_grid(&DomainSpec::Box { lo: vec![-1.0], hi: vec![1.0] }, m, &[m]).unwrap();
    DirichletProblem::new(
        Arc::new(euclidean(1)),
        grid,
        Branch::from_level(0.0, 1).unwrap(),
        Arc::new(|_| 0.0),
        Arc::new(|x| 0.3 * x[0]),
    )
    .unwrap()
}

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    let p = line_problem(17);
    let one = SolverParams { max_iter: 1, ..Default::default() };
    let bumped = GridFunction::from_fn(p.grid(), |q| {
        0.3 * q[0] * q[1] + 0.01 * (std::f64::consts::PI * q[0]).sin() * (0.5 * std::f64::consts::PI * q[1]).cos()
    });
    g.bench_function("one_sweep_17x17", |b| b.iter(|| solve_from(&p, &one, bumped.clone()).unwrap()));
    let params = SolverParams { tol_res: 1e-8, ..Default::default() };
    g.bench_function("relax_17x17", |b| b.iter(|| solve_from(&p, &params, bumped.clone()).unwrap()));
    let q = line_problem(65);
    g.bench_function("exact_start_65x65", |b| b.iter(|| solve(&q, &params).unwrap()));
    g.finish();
}

criterion_group!(benches, eigenvalues, angles, solver);
criterion_main!(benches);
