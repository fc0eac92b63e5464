use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mgcpp_bench::{banded_model, synthetic_day};
use mgcpp_core::calibrate::{calibrate_ticks, CalibrationConfig};
use mgcpp_core::markov_price::sigma_star_general;
use mgcpp_core::point_process::{simulate_hawkes, HawkesSpec};
use mgcpp_core::validation::{empirical_std_curve, Centralization, WindowGrid};
use std::hint::black_box;

fn hawkes(c: &mut Criterion) {
    let uni = HawkesSpec::univariate(1.0, 0.5, 1.0).unwrap();
    let bi = HawkesSpec::new(
        vec![0.5, 0.3],
        vec![vec![0.4, 0.2], vec![0.1, 0.3]],
        vec![vec![1.0, 1.5], vec![1.5, 1.0]],
    )
    .unwrap();
    let mut g = c.benchmark_group("simulate_hawkes");
    g.bench_function("d1_1e4s", |b| {
        b.iter(|| simulate_hawkes(black_box(&uni), 1e4, 1).unwrap())
    });
    g.bench_function("d2_1e4s", |b| {
        b.iter(|| simulate_hawkes(black_box(&bi), 1e4, 1).unwrap())
    });
    g.finish();
}

fn sigma_star(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma_star_general");
    for n in [2, 8, 32] {
        let model = banded_model(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &model, |b, m| {
            b.iter(|| sigma_star_general(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn day_pipeline(c: &mut Criterion) {
    let ticks = synthetic_day(2.0, 7);
    let cfg = CalibrationConfig::default();
    let cal = calibrate_ticks(&ticks, &cfg).unwrap();
    let windows = WindowGrid::Fine.windows();
    let mut g = c.benchmark_group("day");
    g.sample_size(10);
    g.bench_function("calibrate", |b| {
        b.iter(|| calibrate_ticks(black_box(&ticks), &cfg).unwrap())
    });
    g.bench_function("empirical_std_curve_fine", |b| {
        b.iter(|| {
            empirical_std_curve(
                "SYN",
                black_box(&ticks),
                cal.changes.times(),
                cal.params.a_star,
                &windows,
                Centralization::Stochastic,
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, hawkes, sigma_star, day_pipeline);
criterion_main!(benches);
