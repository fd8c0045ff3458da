//! Default rayon pool against a single worker on the heavier kernels.
//! Build with `--no-default-features` to time the plain sequential path.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rankin_core::qmodforms::{eigen_table, EigenTable};
use rankin_core::trace::weil_check;
use rankin_core::variancelab::{sin_kernel_sum, variance_statistic, VarianceConfig};

type Job = Box<dyn Fn(&EigenTable) + Send + Sync>;

fn jobs() -> Vec<(&'static str, Job)> {
    vec![
        (
            "eigen_table_k12_2e5",
            Box::new(|_| {
                black_box(eigen_table(12, 200_000).unwrap());
            }),
        ),
        (
            "sin_kernel_z1024",
            Box::new(|t| {
                black_box(sin_kernel_sum(t, 1024, 32, 10_000).unwrap());
            }),
        ),
        (
            "variance_x2e4",
            Box::new(|t| {
                let cfg = VarianceConfig::new(20_000, 50, 2000);
                black_box(variance_statistic(t, &cfg, 0.384).unwrap());
            }),
        ),
        (
            "weil_c200",
            Box::new(|_| {
                black_box(weil_check(200, 6));
            }),
        ),
    ]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let table = eigen_table(12, 50_000).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    for (name, job) in jobs() {
        let mut g = c.benchmark_group(name);
        g.sample_size(10);
        g.bench_function(format!("pool-{}", rayon::current_num_threads()), |b| {
            b.iter(|| job(&table))
        });
        g.bench_function("single-thread", |b| {
            b.iter(|| single.install(|| job(&table)))
        });
        g.finish();
    }
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let table = eigen_table(12, 50_000).unwrap();
    for (name, job) in jobs() {
        let mut g = c.benchmark_group(name);
        g.sample_size(10);
        g.bench_function("sequential", |b| b.iter(|| job(&table)));
        g.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
