use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wwrank::experiments::{null_distribution_experiment, Statistic};
use wwrank::Execution;

fn null_replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("null_replicates");
    group.sample_size(10);
    for n in [200, 500] {
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| {
                null_distribution_experiment(n, 32, 1, Statistic::Eigenvalue, Execution::Sequential)
                    .unwrap()
            })
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| {
                null_distribution_experiment(
                    n,
                    32,
                    1,
                    Statistic::Eigenvalue,
                    Execution::Parallel { threads: None },
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, null_replicates);
criterion_main!(benches);
