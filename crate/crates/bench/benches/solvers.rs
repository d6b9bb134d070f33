use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stokes_bench::{cube, operators, zero_problem};
use stokes_core::solvers::{solve, SolverConfig};
use stokes_core::{Formulation, SolverKind};

const LEVEL: usize = 2;

fn time_to_solution(c: &mut Criterion) {
    let h = cube(LEVEL);
    let mut g = c.benchmark_group("solve_L2");
    g.sample_size(10);
    for form in [Formulation::Laplace, Formulation::Dop] {
        let ops = operators(&h, form);
        let (rhs, x0) = zero_problem(&ops);
        for kind in SolverKind::ALL {
            let cfg = SolverConfig::new(kind, form);
            g.bench_function(BenchmarkId::new(kind.to_string(), form), |b| {
                b.iter(|| solve(&cfg, &ops, &rhs, &x0).unwrap().result.iterations)
            });
        }
    }
    g.finish();
}

criterion_group!(benches, time_to_solution);
criterion_main!(benches);
