use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use annealkit_core::engine::{closed_final_distribution, run_svmc, RunContext, SvmcOptions};
use annealkit_core::ising::{gibbs_sample, ground_energy};
use annealkit_core::rng::stream;
use annealkit_core::schedule::{build, Protocol, ProtocolKind};
use annealkit_core::thermo::estimate_beta;
use annealkit_core::topology::{chimera_graph, embed_chain};
use annealkit_core::{IsingModel, SpinConfig};

fn closed_evolution(c: &mut Criterion) {
    let schedule = build(&Protocol::new(ProtocolKind::ReversePause), 1.0).unwrap();
    let mut group = c.benchmark_group("closed_evolution");
    for n in [4usize, 8, 10] {
        let model = IsingModel::uniform_chain(n, 1.0).unwrap();
        let initial = SpinConfig::alternating(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| closed_final_distribution(&model, &schedule, &initial, 200, 1.0).unwrap())
        });
    }
    group.finish();
}

fn svmc_anneal(c: &mut Criterion) {
    let model = IsingModel::uniform_chain(300, 1.0).unwrap();
    let schedule = build(&Protocol::new(ProtocolKind::Reverse), 2.0).unwrap();
    let ctx = RunContext::new(ProtocolKind::Reverse, ground_energy(&model).unwrap());
    let initial = SpinConfig::alternating(300);
    let options = SvmcOptions {
        beta_device: 20.0,
        sweeps_per_slice: 1,
        slices: 100,
    };
    let mut rng = stream(1);
    c.bench_function("svmc_n300_100_sweeps", |b| {
        b.iter(|| run_svmc(&model, &schedule, &initial, &options, &ctx, &mut rng).unwrap())
    });
}

fn gibbs(c: &mut Criterion) {
    let model = IsingModel::uniform_chain(300, 1.0).unwrap();
    let mut rng = stream(2);
    c.bench_function("gibbs_n300_100_sweeps", |b| {
        b.iter(|| gibbs_sample(&model, 1.0, 100, &mut rng).unwrap())
    });
}

fn beta_estimation(c: &mut Criterion) {
    let model = IsingModel::uniform_chain(64, 1.0).unwrap();
    let mut rng = stream(3);
    let samples: Vec<SpinConfig> = (0..1000)
        .map(|_| gibbs_sample(&model, 0.8, 20, &mut rng).unwrap())
        .collect();
    c.bench_function("estimate_beta_1000x64", |b| {
        b.iter(|| estimate_beta(black_box(&samples), &model).unwrap())
    });
}

fn embedding(c: &mut Criterion) {
    let graph = chimera_graph(16, 16, 4).unwrap();
    c.bench_function("embed_chain_300", |b| {
        b.iter(|| embed_chain(&graph, black_box(300)).unwrap())
    });
}

criterion_group!(
    benches,
    closed_evolution,
    svmc_anneal,
    gibbs,
    beta_estimation,
    embedding
);
criterion_main!(benches);
