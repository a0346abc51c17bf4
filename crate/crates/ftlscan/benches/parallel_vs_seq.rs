//! Compares the rayon-parallel drivers against their sequential twins on
//! the Monte Carlo estimator and the counterexample grid scan. Both paths
//! produce bitwise-identical results; the interesting number is throughput.

use criterion::{criterion_group, criterion_main, Criterion};

use ftlscan::{
    estimate_mean_time, estimate_mean_time_seq, scan_counterexamples, scan_counterexamples_seq,
    GridSpec, Policy, ProblemConfig,
};

fn bench_estimate(c: &mut Criterion) {
    let cfg = ProblemConfig::new(1.0, 0.4, vec![2.0, 1.4, 0.0]).unwrap();
    let mut group = c.benchmark_group("estimate_mean_time");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| estimate_mean_time(&cfg, &Policy::Ftl, 1e-3, 400, 7).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| estimate_mean_time_seq(&cfg, &Policy::Ftl, 1e-3, 400, 7).unwrap())
    });
    group.finish();
}

fn bench_scan(c: &mut Criterion) {
    let grid = GridSpec {
        x1_min: 1.8,
        x1_max: 2.2,
        x2_min: 1.2,
        x2_max: 1.6,
        step: 0.1,
    };
    let mut group = c.benchmark_group("scan_counterexamples");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| scan_counterexamples(0.4, 1.0, &grid).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| scan_counterexamples_seq(0.4, 1.0, &grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_estimate, bench_scan);
criterion_main!(benches);
