//! Engine benchmarks: geometry builders, secular-system assembly, the
//! eigenvalue path, and one full scattering solve. Sizes are chosen so a
//! full `cargo bench` stays in the tens of seconds.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use latticewave_core::dual::assemble_equilateral;
use latticewave_core::graph::build::{attach_lead, build_sinai_graph, build_square_lattice};
use latticewave_core::scattering::solve_scattering;
use latticewave_core::spectral::adjacency_eigen_path;
use latticewave_core::LeadDirection;

fn bench_build(c: &mut Criterion) {
    c.bench_function("build_square_31", |b| {
        b.iter(|| build_square_lattice(black_box(31), 31, 0.15, |_| 0.0).unwrap())
    });
    c.bench_function("build_sinai_49", |b| {
        b.iter(|| build_sinai_graph(black_box(49), 0.15, [3.6, 3.6], 1.8).unwrap())
    });
}

fn bench_assembly(c: &mut Criterion) {
    let graph = build_square_lattice(31, 31, 0.15, |_| 0.0).unwrap();
    c.bench_function("assemble_equilateral_31", |b| {
        b.iter(|| assemble_equilateral(&graph, black_box(Complex64::new(1.3, 0.0))).unwrap())
    });
}

fn bench_eigen(c: &mut Criterion) {
    let graph = build_square_lattice(21, 21, 0.15, |_| 0.0).unwrap();
    c.bench_function("eigen_21x21_10_modes", |b| {
        b.iter(|| adjacency_eigen_path(black_box(&graph), 10).unwrap())
    });
}

fn bench_scattering(c: &mut Criterion) {
    let base = build_sinai_graph(49, 0.15, [3.6, 3.6], 1.8).unwrap();
    let with_inlet = attach_lead(&base, &[7, 20], LeadDirection::Incoming).unwrap();
    let graph = attach_lead(&with_inlet, &[30, 40], LeadDirection::Outgoing).unwrap();
    c.bench_function("scatter_sinai_49", |b| {
        b.iter(|| solve_scattering(black_box(&graph), 1.6).unwrap())
    });
}

criterion_group!(
    benches,
    bench_build,
    bench_assembly,
    bench_eigen,
    bench_scattering
);
criterion_main!(benches);
