use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use stokes_bench::{cube, operators, zero_problem};
use stokes_core::multigrid::{CoarseSolverSpec, CycleSpec, Multigrid};
use stokes_core::smoothers::{uzawa_step, velocity_sweep, Direction};
use stokes_core::{Formulation, OperatorTag};

const LEVEL: usize = 3;

fn stencil_apply(c: &mut Criterion) {
    let h = cube(LEVEL);
    let ops = operators(&h, Formulation::Laplace);
    let n = ops.nodes(LEVEL);
    let mut g = c.benchmark_group("apply");
    g.throughput(Throughput::Elements(n as u64));
    for tag in OperatorTag::ALL {
        let (cin, cout) = tag.shape();
        let x: Vec<f64> = (0..cin * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; cout * n];
        g.bench_with_input(BenchmarkId::from_parameter(tag), &tag, |b, &tag| {
            b.iter(|| ops.apply(tag, LEVEL, black_box(&x), &mut y).unwrap())
        });
    }
    g.finish();
}

fn smoothers(c: &mut Criterion) {
    let h = cube(LEVEL);
    let mut g = c.benchmark_group("smoother");
    for form in [Formulation::Laplace, Formulation::Dop] {
        let ops = operators(&h, form);
        let (rhs, x0) = zero_problem(&ops);
        g.throughput(Throughput::Elements(ops.nodes(LEVEL) as u64));
        g.bench_function(BenchmarkId::new("velocity_fhgs", form), |b| {
            let mut u = x0.u().to_vec();
            b.iter(|| velocity_sweep(&ops, LEVEL, &mut u, rhs.u(), Direction::Forward))
        });
        g.bench_function(BenchmarkId::new("uzawa", form), |b| {
            let mut x = x0.clone();
            b.iter(|| uzawa_step(&ops, &mut x, &rhs, 1))
        });
    }
    g.finish();
}

fn cycles(c: &mut Criterion) {
    let h = cube(LEVEL);
    let ops = operators(&h, Formulation::Laplace);
    let (rhs, x0) = zero_problem(&ops);
    let mut g = c.benchmark_group("cycle");
    g.sample_size(20);
    g.bench_function("velocity_V(3,3)", |b| {
        let mut mg = Multigrid::new(&ops, CycleSpec::v(3, 3, CoarseSolverSpec::CG));
        let mut u = x0.u().to_vec();
        b.iter(|| mg.velocity_cycle(LEVEL, &mut u, rhs.u()))
    });
    g.bench_function("saddle_Vvar(3,3)", |b| {
        let mut mg = Multigrid::new(&ops, CycleSpec::vvar(3, 3, CoarseSolverSpec::PMINRES));
        let mut x = x0.clone();
        b.iter(|| mg.saddle_cycle(&mut x, &rhs).unwrap())
    });
    g.finish();
}

criterion_group!(benches, stencil_apply, smoothers, cycles);
criterion_main!(benches);
