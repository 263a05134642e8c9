use criterion::{criterion_group, criterion_main, Criterion};
use gbm_bench::{planar_combo, sampled_polytope, MC_SAMPLES, PDE_H};
use gbm_core::gaussmeasure::measure;
use gbm_core::localpde::{solve_dirichlet, BoundaryData};
use gbm_core::sigma::{DEFAULT_NODES, DEFAULT_R_MAX};
use gbm_core::{Body, SamplingBudget, SigmaTable};
use std::hint::black_box;

fn monte_carlo(c: &mut Criterion) {
    let body = sampled_polytope().unwrap();
    c.bench_function("measure/polytope-3d/2e5", |b| {
        b.iter(|| measure(black_box(&body), SamplingBudget::new(MC_SAMPLES, 7)).unwrap())
    });
}

fn sigma_tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma-build");
    for n in [2, 6] {
        g.bench_function(format!("n{n}"), |b| b.iter(|| SigmaTable::build(n, DEFAULT_R_MAX, DEFAULT_NODES).unwrap()));
    }
    g.finish();
}

fn pde(c: &mut Criterion) {
    let disk = Body::ball(2, 1.0).unwrap();
    let combo = planar_combo().unwrap();
    let mut g = c.benchmark_group("pde-solve");
    g.sample_size(10);
    g.bench_function("disk", |b| b.iter(|| solve_dirichlet(&disk, |_, _| 1.0, BoundaryData::Zero, PDE_H).unwrap()));
    g.bench_function("square+disk", |b| {
        b.iter(|| solve_dirichlet(&combo, |_, _| 1.0, BoundaryData::Cos { freq: 1.3 }, PDE_H).unwrap())
    });
    g.finish();
}

criterion_group!(benches, monte_carlo, sigma_tables, pde);
criterion_main!(benches);
