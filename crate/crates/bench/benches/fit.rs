use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sdrbench_bench::dataset;
use sdrbench_core::dr::{covariance_blocks, fit, fit_blocks, fit_prefixes};
use sdrbench_core::{FitConfig, Method};

fn fit_methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for n in [100, 300] {
        let (x, y) = dataset(n, 2 * n, 7).unwrap();
        for method in [Method::Pca, Method::Pls, Method::Cca, Method::Rcca] {
            let cfg = FitConfig::new(method, 10);
            group.bench_with_input(BenchmarkId::new(method.label(), n), &cfg, |b, cfg| b.iter(|| fit(&x, &y, cfg).unwrap()));
        }
    }
    group.finish();
}

fn covariance(c: &mut Criterion) {
    let mut group = c.benchmark_group("covariance_blocks");
    for n in [100, 300] {
        let (x, y) = dataset(n, 2 * n, 7).unwrap();
        group.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| covariance_blocks(&x, &y).unwrap()));
    }
    group.finish();
}

fn prefixes(c: &mut Criterion) {
    let (x, y) = dataset(200, 600, 7).unwrap();
    let blocks = covariance_blocks(&x, &y).unwrap();
    let ks = [2, 5, 10, 15, 30, 60];
    let cfg = FitConfig::new(Method::Rcca, 60);
    let mut group = c.benchmark_group("rcca_k_grid");
    group.sample_size(10);
    group.bench_function("shared_deflation", |b| b.iter(|| fit_prefixes(&blocks, &cfg, &ks).unwrap()));
    group.bench_function("separate_fits", |b| {
        b.iter(|| ks.iter().map(|&k| fit_blocks(&blocks, &FitConfig::new(Method::Rcca, k)).unwrap()).collect::<Vec<_>>())
    });
    group.finish();
}

criterion_group!(benches, fit_methods, covariance, prefixes);
criterion_main!(benches);
