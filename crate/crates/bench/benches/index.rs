use std::f64::consts::PI;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use maslov_core::asymptotic::{asymptotic_index, default_horizons};
use maslov_core::fixtures::{linear_path, FlowSample};
use maslov_core::flow::{tangent_flow, tangent_flow_sampled};
use maslov_core::linalg::random_lagrangian;
use maslov_core::path::{crossing_mi, maslov_index};
use maslov_core::system::builtins;
use maslov_core::unitary::angles;
use maslov_core::{LagrangianFrame, Tolerances};

fn linalg(c: &mut Criterion) {
    let l = random_lagrangian(3, 7);
    c.bench_function("angles_d3", |b| b.iter(|| angles(black_box(&l)).unwrap()));
}

fn flows(c: &mut Criterion) {
    let t = Tolerances::default();
    let sys = builtins::damped_pendulum(0.1);
    c.bench_function("tangent_flow_pendulum_T10", |b| {
        b.iter(|| tangent_flow_sampled(&sys, black_box(&[1.0, 0.3]), (0.0, 10.0), 1e-3, 10, &t).unwrap())
    });
}

fn indices(c: &mut Criterion) {
    let t = Tolerances::default();
    let tr = Arc::new(tangent_flow(&builtins::harmonic(1), &[1.0, 0.0], (0.0, 2.0 * PI), 1e-3, &t).unwrap());
    let harmonic = tr.lagrangian_path(&LagrangianFrame::horizontal(1), &t).unwrap();
    c.bench_function("maslov_index_harmonic_period", |b| b.iter(|| maslov_index(black_box(&harmonic), &t).unwrap()));

    let linear = linear_path(3, 11, 2.0, 200).unwrap();
    c.bench_function("maslov_index_linear_d3", |b| b.iter(|| maslov_index(black_box(&linear), &t).unwrap()));
    c.bench_function("crossing_mi_linear_d3", |b| b.iter(|| crossing_mi(black_box(&linear), &t).unwrap()));

    let flow_path = FlowSample::random(2, 5, 6.0).path(1e-3, 10, &t).unwrap();
    c.bench_function("crossing_mi_flow_d2", |b| b.iter(|| crossing_mi(black_box(&flow_path), &t).unwrap()));
}

fn asymptotics(c: &mut Criterion) {
    let t = Tolerances::default();
    let sys = builtins::damped_pendulum(0.1);
    let mut group = c.benchmark_group("asymptotic");
    group.sample_size(10);
    group.bench_function("sink_T50", |b| {
        b.iter(|| asymptotic_index(&sys, &[0.0, 0.0], &LagrangianFrame::horizontal(1), &default_horizons(50.0), 1e-3, &t).unwrap())
    });
    group.finish();
}

criterion_group!(benches, linalg, flows, indices, asymptotics);
criterion_main!(benches);
