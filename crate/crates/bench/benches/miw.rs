use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use miw_core::gaussians::{scaled_tail, stein_tail_gap};
use miw_core::metrics::{kolmogorov, wasserstein};
use miw_core::{solve, solve_with, Precision, SawtoothSolution, DEFAULT_TOL};

fn bench_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    for n in [1_000usize, 100_000] {
        g.bench_with_input(BenchmarkId::new("double", n), &n, |b, &n| {
            b.iter(|| solve(black_box(n), DEFAULT_TOL).unwrap())
        });
    }
    g.bench_function(BenchmarkId::new("dd", 1_000), |b| {
        b.iter(|| solve_with(black_box(1_000), DEFAULT_TOL, Precision::DoubleDouble).unwrap())
    });
    g.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("metrics");
    for n in [1_000usize, 100_000] {
        let cfg = solve(n, DEFAULT_TOL).unwrap();
        g.bench_with_input(BenchmarkId::new("kolmogorov", n), &cfg, |b, cfg| {
            b.iter(|| kolmogorov(black_box(cfg)))
        });
        g.bench_with_input(BenchmarkId::new("wasserstein", n), &cfg, |b, cfg| {
            b.iter(|| wasserstein(black_box(cfg)))
        });
    }
    g.finish();
}

fn bench_tails(c: &mut Criterion) {
    let ws: Vec<f64> = (0..1000).map(|i| -35.0 + 75.0 * i as f64 / 999.0).collect();
    c.bench_function("scaled_tail/1000", |b| {
        b.iter(|| ws.iter().map(|&w| scaled_tail(black_box(w))).sum::<f64>())
    });
    c.bench_function("stein_tail_gap/1000", |b| {
        b.iter(|| {
            ws.iter()
                .map(|&w| stein_tail_gap(black_box(w)))
                .sum::<f64>()
        })
    });
}

fn bench_sawtooth(c: &mut Criterion) {
    let cfg = solve(10_000, DEFAULT_TOL).unwrap();
    c.bench_function("sawtooth_solution/build/10000", |b| {
        b.iter(|| SawtoothSolution::new(black_box(&cfg)))
    });
    let sol = SawtoothSolution::new(&cfg);
    c.bench_function("sawtooth_solution/g_h", |b| {
        b.iter(|| sol.g_h(black_box(0.37)))
    });
}

criterion_group!(
    benches,
    bench_solve,
    bench_metrics,
    bench_tails,
    bench_sawtooth
);
criterion_main!(benches);
