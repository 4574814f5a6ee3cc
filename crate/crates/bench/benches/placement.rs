use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lagplace_bench::{hamiltonian_problem, symmetric_problem, FIXTURE_SEED};
use lagplace_core::lagrangian::{degree_lagrangian, nondegeneracy_certificate_diagonal};
use lagplace_core::solver::{solve, SolverConfig};
use std::hint::black_box;

fn degree(c: &mut Criterion) {
    let mut group = c.benchmark_group("degree_lagrangian");
    for n in [5usize, 10, 20] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| degree_lagrangian(black_box(n))));
    }
    group.finish();
}

fn homotopy(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let sym2 = symmetric_problem(2, FIXTURE_SEED).expect("fixture");
    group.bench_function("symmetric_n2", |b| b.iter(|| solve(black_box(&sym2), 1, &cfg)));
    let ham2 = hamiltonian_problem(2, FIXTURE_SEED).expect("fixture");
    group.bench_function("hamiltonian_n2", |b| b.iter(|| solve(black_box(&ham2), 1, &cfg)));
    group.finish();
}

fn certificate(c: &mut Criterion) {
    c.bench_function("certificate_n3", |b| b.iter(|| nondegeneracy_certificate_diagonal(black_box(3))));
}

criterion_group!(benches, degree, homotopy, certificate);
criterion_main!(benches);
