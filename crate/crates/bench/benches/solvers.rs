use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use noisy_portfolio::{run_solo, RunSeed, SolverSpec, TraceDensity};
use noisy_portfolio_bench::sphere;

fn solo_runs(c: &mut Criterion) {
    let problem = sphere();
    let mut group = c.benchmark_group("solo");
    group.sample_size(10);
    for key in ["rsaes", "fabian1", "fabian2", "newton"] {
        let spec: SolverSpec = key.parse().unwrap();
        group.bench_with_input(BenchmarkId::new(key, 100_000), &spec, |b, spec| {
            let mut run = 0;
            b.iter(|| {
                run += 1;
                let seed = RunSeed::new(1, run);
                black_box(run_solo(spec, &problem, &seed, 100_000, TraceDensity::default()).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, solo_runs);
criterion_main!(benches);
