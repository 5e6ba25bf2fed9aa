use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvsk_bench::{crra10, mean_variance_qp, moments, tilt};
use mvsk_core::sca::{solve_mvsk, solve_tilting, Method, MvskOptions, TiltingOptions};
use mvsk_core::subsolvers::{solve_qp, DEFAULT_TOL};
use mvsk_core::FeasibleSet;

fn mvsk(c: &mut Criterion) {
    let spec = crra10();
    let fs = FeasibleSet::long_only();
    let opts = MvskOptions::default();
    let mut group = c.benchmark_group("mvsk");
    group.sample_size(20);
    for n in [10, 20] {
        let m = moments(n, 1);
        for method in [Method::Dc, Method::Mm, Method::Qmvsk] {
            group.bench_with_input(BenchmarkId::new(method.name(), n), &m, |b, m| {
                b.iter(|| solve_mvsk(method, black_box(m), &spec, &fs, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn tilting(c: &mut Criterion) {
    let fs = FeasibleSet::long_only();
    let opts = TiltingOptions::default();
    let mut group = c.benchmark_group("tilting");
    group.sample_size(10);
    let m = moments(10, 2);
    let t = tilt(&m);
    for method in [Method::Lmvskt, Method::Qmvskt] {
        group.bench_function(method.name(), |b| {
            b.iter(|| solve_tilting(method, black_box(&m), &t, &fs, &opts).unwrap())
        });
    }
    group.finish();
}

fn subsolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("mean_variance_qp");
    for n in [10, 40] {
        let p = mean_variance_qp(&moments(n, 3));
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| solve_qp(black_box(p), DEFAULT_TOL).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, mvsk, tilting, subsolver);
criterion_main!(benches);
