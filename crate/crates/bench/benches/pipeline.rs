use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ebic_bench::study_dataset;
use ebic_core::ebic::{ebic_score, log_binomial};
use ebic_core::pipeline::{prepare, run_two_stage, screen, PipelineConfig};
use std::hint::black_box;

fn criterion_terms(c: &mut Criterion) {
    c.bench_function("log_binomial/74622_choose_9", |b| {
        b.iter(|| log_binomial(black_box(74_622), black_box(9)).unwrap())
    });
    c.bench_function("ebic_score", |b| {
        b.iter(|| ebic_score(black_box(41.7), 200, 595, black_box(6), 0.79).unwrap())
    });
}

fn two_stage(c: &mut Criterion) {
    let config = PipelineConfig::default();
    let mut group = c.benchmark_group("two_stage");
    group.sample_size(10);
    for n in [100, 200] {
        let data = study_dataset(n, 0.6, 7);
        group.bench_with_input(BenchmarkId::new("screen", n), &data, |b, d| {
            b.iter(|| screen(&d.x, &d.y, &config).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("prepare", n), &data, |b, d| {
            b.iter(|| prepare(&d.x, &d.y, &config).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("run", n), &data, |b, d| {
            b.iter(|| run_two_stage(d, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, criterion_terms, two_stage);
criterion_main!(benches);
