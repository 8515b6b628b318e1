use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ruin_bench::fixture;
use ruin_core::mc::{estimate_psi, SimConfig};
use ruin_core::solver::{convolve_all, TailSamples};
use ruin_core::{assemble, derive_params, solve_g1, SolverConfig, UniformGrid};

fn solve(c: &mut Criterion) {
    let (m, d) = fixture();
    let base = SolverConfig::for_model(&derive_params(&m), &d);
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for n in [1usize << 11, 1 << 12, 1 << 13] {
        let cfg = SolverConfig { n, ..base };
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| assemble(&solve_g1(&m, &d, cfg).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn convolution(c: &mut Criterion) {
    let (_, d) = fixture();
    let mut group = c.benchmark_group("convolve_all");
    for n in [1usize << 10, 1 << 12] {
        let grid = UniformGrid::new(100.0, n).unwrap();
        let tail = TailSamples::new(&d, &grid);
        let g: Vec<f64> = grid.nodes().iter().map(|u| 1.0 / (1.0 + u * u)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| convolve_all(black_box(g), &tail, grid.h))
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let (m, d) = fixture();
    let cfg = SimConfig {
        horizon: 20.0,
        dt_max: 0.05,
        n_paths: 2_000,
        seed: 1,
        survival_barrier: 1e3,
        u_values: vec![0.5, 1.0, 2.0, 5.0],
    };
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("2000_paths_horizon_20", |b| {
        b.iter(|| estimate_psi(&m, &d, black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, solve, convolution, monte_carlo);
criterion_main!(benches);
