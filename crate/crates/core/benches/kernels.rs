//! Sequential versus parallel execution of the heavy kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tailasym::estimation::ci_bootstrap;
use tailasym::measures::sigma3;
use tailasym::sampling::sample_clayton_cauchy;
use tailasym::simulation::{run_scenario_with, Scenario, ScenarioModel};
use tailasym::{CopulaModel, Parallelism, SeedSpec};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn bootstrap(c: &mut Criterion) {
    let sample = sample_clayton_cauchy(20.0, 2000, SeedSpec::new(1, 0)).unwrap();
    let grid: Vec<f64> = (1..=50).map(|k| k as f64 / 100.0).collect();
    let mut g = c.benchmark_group("bootstrap_n2000_b199");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ci_bootstrap(black_box(&sample), &grid, 0.9, 199, SeedSpec::new(2, 0), mode).unwrap())
        });
    }
    g.finish();
}

fn scenario(c: &mut Criterion) {
    let s = Scenario {
        n: 2000,
        replications: 64,
        ..Scenario::desk(ScenarioModel::ClaytonCauchy { theta: 20.0 }, 3)
    };
    let mut g = c.benchmark_group("scenario_n2000_r64");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_scenario_with(black_box(&s), mode).unwrap())
        });
    }
    g.finish();
}

fn lattice(c: &mut Criterion) {
    let model = CopulaModel::gumbel(2.0).unwrap();
    let mut g = c.benchmark_group("sigma3_r400");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sigma3(black_box(&model), 400, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bootstrap, scenario, lattice);
criterion_main!(benches);
