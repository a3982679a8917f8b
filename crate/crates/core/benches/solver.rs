//! Solver throughput with the data-parallel backend against a single worker.
//! Build with `--no-default-features` to time the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rspin_core::compute_tau;
use rspin_core::exec::backend;

const CASES: [(u32, u32); 3] = [(3, 4), (4, 3), (5, 2)];

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_tau");
    group.sample_size(10);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for (r, d) in CASES {
        let label = format!("r{r}_d{d}");
        group.bench_with_input(BenchmarkId::new(backend(), &label), &(r, d), |b, &(r, d)| {
            b.iter(|| compute_tau(r, d, None).unwrap())
        });
        group.bench_with_input(
            BenchmarkId::new(format!("{}_1thread", backend()), &label),
            &(r, d),
            |b, &(r, d)| single.install(|| b.iter(|| compute_tau(r, d, None).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, solver);
criterion_main!(benches);
