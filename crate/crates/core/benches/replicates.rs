use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use esbmix::analytics::{expected_kn_curve, sample_kn};
use esbmix::mcmc::{eap_density, run_chain, Dataset, FitConfig, FitPrior, MixtureKernel};
use esbmix::{Exec, LengthProcessSpec};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kn(c: &mut Criterion) {
    let spec = LengthProcessSpec::dsb(1.0, 3.0).unwrap();
    let mut group = c.benchmark_group("sample_kn_n20_50k");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sample_kn(black_box(&spec), 20, 50_000, 1, exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("expected_kn_curve_n200_20k");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| expected_kn_curve(black_box(&spec), 200, 20_000, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn eap(c: &mut Criterion) {
    let values: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -3.0 } else { 3.0 } + (i as f64 * 0.37).sin()).collect();
    let data = Dataset::univariate(values).unwrap();
    let prior = FitPrior::Lengths(LengthProcessSpec::dsb(1.0, 1.0).unwrap());
    let mut config = FitConfig::new(prior, MixtureKernel::default_univariate(&data));
    config.iterations = 2500;
    config.burn_in = 500;
    config.thin = 4;
    let samples = run_chain(&data, &config, |_| {}).unwrap().samples;
    let grid = Dataset::univariate((0..=2000).map(|i| -10.0 + i as f64 * 0.01).collect()).unwrap();

    let mut group = c.benchmark_group("eap_density_500x2001");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| eap_density(black_box(&samples), &grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kn, eap);
criterion_main!(benches);
