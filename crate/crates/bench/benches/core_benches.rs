//! Benchmarks for the numeric kernels on realistic sizes: 32 channels,
//! 250-sample epochs, feature sets in the tens-to-hundreds.

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use neuroscore::beamformer::{optimal_latency_search, solve_filter};
use neuroscore::dsp::butter_bandpass;
use neuroscore::metrics::{fid, mmd_squared, Bandwidth, FeatureSet, Gaussian, MmdEstimator};
use neuroscore::model::{labels, Epoch, EpochSet};
use neuroscore::stats::{bootstrap_correlation, ScoreTable};

fn random_spd(c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(c, c, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(c, c) * 0.1
}

fn bench_solve_filter(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sigma = random_spd(32, &mut rng);
    let pattern = DVector::from_fn(32, |_, _| rng.random_range(-1.0..1.0f64));
    c.bench_function("solve_filter_32ch", |b| {
        b.iter(|| solve_filter(black_box(&sigma), black_box(&pattern)).unwrap())
    });
}

fn synthetic_set(n_targets: usize, n_standards: usize) -> EpochSet {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut epochs = Vec::new();
    for i in 0..(n_targets + n_standards) {
        let target = i < n_targets;
        let data = DMatrix::from_fn(32, 250, |c, t| {
            let mut v: f64 = rng.random_range(-5.0..5.0);
            if target && (100..=140).contains(&t) && c >= 22 {
                v += 2.0;
            }
            v
        });
        epochs.push(Epoch {
            data,
            label: if target {
                "DCGAN".into()
            } else {
                labels::STANDARD.into()
            },
            onset_offset_ms: 0.0,
        });
    }
    EpochSet::new(
        epochs,
        250.0,
        (0..32).map(|i| format!("ch{i}")).collect(),
        (0.0, 1000.0),
    )
    .unwrap()
}

fn bench_latency_search(c: &mut Criterion) {
    let set = synthetic_set(48, 200);
    c.bench_function("latency_search_248_epochs", |b| {
        b.iter(|| optimal_latency_search(black_box(&set), (400.0, 600.0)).unwrap())
    });
}

fn bench_filtfilt(c: &mut Criterion) {
    let filter = butter_bandpass(4, 0.5, 20.0, 1000.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..60_000).map(|_| rng.random_range(-10.0..10.0)).collect();
    c.bench_function("filtfilt_60k_samples", |b| {
        b.iter(|| filter.filtfilt(black_box(&x)))
    });
}

fn bench_mmd(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = FeatureSet::new(DMatrix::from_fn(100, 64, |_, _| rng.random_range(-1.0..1.0f64)))
        .unwrap();
    let y = FeatureSet::new(DMatrix::from_fn(100, 64, |_, _| rng.random_range(-1.0..1.0f64)))
        .unwrap();
    c.bench_function("mmd_unbiased_100x64", |b| {
        b.iter(|| {
            mmd_squared(
                black_box(&x),
                black_box(&y),
                Bandwidth::Fixed(8.0),
                MmdEstimator::Unbiased,
            )
            .unwrap()
        })
    });
}

fn bench_fid(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = |rng: &mut ChaCha8Rng| Gaussian {
        mean: DVector::from_fn(64, |_, _| rng.random_range(-1.0..1.0f64)),
        cov: random_spd(64, rng),
    };
    let a = g(&mut rng);
    let b_ = g(&mut rng);
    c.bench_function("fid_64d", |b| {
        b.iter(|| fid(black_box(&a), black_box(&b_)).unwrap())
    });
}

fn bench_bootstrap(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    for p in 0..12 {
        for cat in 0..4 {
            ta.push((format!("p{p}"), format!("c{cat}"), rng.random_range(0.0..1.0)));
            tb.push((format!("p{p}"), format!("c{cat}"), rng.random_range(0.0..1.0)));
        }
    }
    let a = ScoreTable::from_triples(ta).unwrap();
    let b_ = ScoreTable::from_triples(tb).unwrap();
    c.bench_function("bootstrap_1000_iterations", |b| {
        b.iter(|| bootstrap_correlation(black_box(&a), black_box(&b_), 1000, 7).unwrap())
    });
}

criterion_group!(
    benches,
    bench_solve_filter,
    bench_latency_search,
    bench_filtfilt,
    bench_mmd,
    bench_fid,
    bench_bootstrap
);
criterion_main!(benches);
