use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mart_entropy::grid_entropy::{restricted_entropy_mc, ModelPair};
use mart_entropy::models::{ModelSpec, Volatility};
use mart_entropy::specific_entropy::{gantert_bound_mc, GantertMode};
use mart_entropy::{Execution, Matrix, McConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn chain_rule(c: &mut Criterion) {
    let gamma = Matrix::from_rows(&[vec![0.6, 0.2], vec![-0.1, 0.5]]).unwrap();
    let pair = ModelPair::new(
        ModelSpec::black_scholes(gamma),
        ModelSpec::brownian(2).with_x0(vec![1.0, 1.0]).unwrap(),
    )
    .unwrap();
    let mut group = c.benchmark_group("chain_rule_gbm_n16");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = McConfig { paths: 20_000, seed: 1, execution };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| restricted_entropy_mc(&pair, 16, cfg).unwrap())
        });
    }
    group.finish();
}

fn gantert_midpoint(c: &mut Criterion) {
    let q = ModelSpec::sde(1, Volatility::sin_state(1.0, 0.5)).unwrap();
    let mut group = c.benchmark_group("gantert_sde_m128");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = McConfig { paths: 10_000, seed: 2, execution };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| gantert_bound_mc(&q, 128, cfg, GantertMode::Midpoint).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let q = ModelSpec::sde(2, Volatility::sin_state(1.0, 0.5)).unwrap().with_substeps(16).unwrap();
    let mut group = c.benchmark_group("simulate_sde_n32");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, &execution| {
            b.iter(|| q.simulate(32, 10_000, 3, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, chain_rule, gantert_midpoint, simulation);
criterion_main!(benches);
