//! Comparison of the data-parallel grid sweeps against the sequential
//! reference paths. Both produce bit-identical values; the bench measures
//! the speedup only.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use schwz_core::green::{green_grid, green_grid_serial};
use schwz_core::metric::{l_half_distance, l_half_distance_serial};
use schwz_core::poly::Poly;
use schwz_core::region::Region;

fn bench_green_grid(c: &mut Criterion) {
    let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
    let region = Region::square(-3.0, 3.0, 96).unwrap();
    let mut group = c.benchmark_group("green_grid_96x96");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || (f.clone(), region),
            |(f, region)| green_grid(&f, &region, 1e-12),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("serial", |b| {
        b.iter_batched(
            || (f.clone(), region),
            |(f, region)| green_grid_serial(&f, &region, 1e-12),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_l_half(c: &mut Criterion) {
    let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
    let region = Region::square(-3.0, 3.0, 48).unwrap();
    let mut group = c.benchmark_group("l_half_n6_48x48");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || (f.clone(), region),
            |(f, region)| l_half_distance(&f, 6, &region).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("serial", |b| {
        b.iter_batched(
            || (f.clone(), region),
            |(f, region)| l_half_distance_serial(&f, 6, &region).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_green_grid, bench_l_half);
criterion_main!(benches);
