use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use spmopt_bench::random_model;
use spmopt_core::allocator::{solve_exact, solve_exhaustive};

fn placement(c: &mut Criterion) {
    let mut group = c.benchmark_group("placement");

    let small = random_model(12, 3, 7);
    group.bench_function("solve_exact_12v_3spm", |b| {
        b.iter_batched(
            || small.clone(),
            |m| black_box(solve_exact(&m).unwrap()),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("solve_exhaustive_12v_3spm", |b| {
        b.iter_batched(
            || small.clone(),
            |m| black_box(solve_exhaustive(&m).unwrap()),
            BatchSize::SmallInput,
        )
    });

    let large = random_model(30, 3, 11);
    group.bench_function("solve_exact_30v_3spm", |b| {
        b.iter_batched(
            || large.clone(),
            |m| black_box(solve_exact(&m).unwrap()),
            BatchSize::SmallInput,
        )
    });

    group.finish();
}

criterion_group!(benches, placement);
criterion_main!(benches);
