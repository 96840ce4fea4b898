// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperqec::appendix::{bundled_appendix, verify_appendix};
use hyperqec::optimizer::{cycle_rng, random_start, Problem, SearchSpace};
use hyperqec::{contraction_map, permanent, reck_decompose, reduced_basis, target_csign, MeasurementScheme};

fn bench_permanent(c: &mut Criterion) {
    let mut group = c.benchmark_group("permanent");
    for k in [3, 5, 7, 9] {
        let a = random_start(k, &mut cycle_rng(1, k)).into_matrix();
        group.bench_with_input(BenchmarkId::from_parameter(k), &a, |b, a| {
            b.iter(|| permanent(black_box(a)))
        });
    }
    group.finish();
}

fn bench_contraction(c: &mut Criterion) {
    let t = random_start(6, &mut cycle_rng(2, 0));
    let basis = reduced_basis();
    let scheme = MeasurementScheme::three_single_photons(3);
    c.bench_function("contraction_map/reduced", |b| {
        b.iter(|| contraction_map(black_box(&t), &basis, &scheme))
    });

    let full = random_start(9, &mut cycle_rng(2, 1));
    let target = target_csign();
    let scheme9 = MeasurementScheme::three_single_photons(6);
    c.bench_function("contraction_map/full", |b| {
        b.iter(|| contraction_map(black_box(&full), &target.basis, &scheme9))
    });
}

fn bench_gradient(c: &mut Criterion) {
    let problem = Problem::new(SearchSpace::Reduced, &SearchSpace::Reduced.default_scheme()).unwrap();
    let m = random_start(6, &mut cycle_rng(3, 0)).into_matrix();
    c.bench_function("metrics/reduced", |b| b.iter(|| problem.raw(black_box(&m))));
    c.bench_function("gradients/reduced", |b| {
        b.iter(|| problem.raw_with_gradients(black_box(&m)))
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let t = bundled_appendix().unwrap();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("verify_appendix", |b| b.iter(|| verify_appendix(black_box(&t))));
    group.finish();

    let u = hyperqec::dilate(&random_start(9, &mut cycle_rng(4, 0)).scaled(0.1))
        .unwrap()
        .unitary;
    c.bench_function("reck_decompose/18", |b| b.iter(|| reck_decompose(black_box(&u))));
}

criterion_group!(
    benches,
    bench_permanent,
    bench_contraction,
    bench_gradient,
    bench_pipeline
);
criterion_main!(benches);
