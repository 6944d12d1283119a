use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holonomy_bench::{trig_controls, trig_system};

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_ruled");
    for steps in [64, 256, 1024] {
        let sys = trig_system(3, 4, 8, steps).unwrap();
        let g = trig_controls(&sys).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, _| {
            b.iter(|| sys.solve_ruled(black_box(&g)).unwrap())
        });
    }
    group.finish();
}

fn holonomy(c: &mut Criterion) {
    let mut group = c.benchmark_group("holonomy");
    for steps in [64, 256, 1024] {
        let sys = trig_system(3, 4, 8, steps).unwrap();
        let g = trig_controls(&sys).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, _| {
            b.iter(|| sys.holonomy(black_box(&g)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solve, holonomy);
criterion_main!(benches);
