//! Parallel vs sequential throughput on the data-parallel inner loops:
//! Monte Carlo coefficient perturbation, batch counterfactual search, and
//! the neighbor-pair sensitivity sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dpc::autoencoder::{build_prototypes, AutoencoderSpec};
use dpc::classifier::{train_classifier, ClassifierSpec};
use dpc::counterfactual::{search_counterfactual, SearchConfig};
use dpc::data::synth_blobs;
use dpc::exec;
use dpc::mechanism::{aggregate_coefficients, perturb, sensitivity_bound, PrivacyBudget};
use dpc::numerics::{Activation, OptimizerKind};
use dpc::RngState;

fn bench_perturbation_trials(c: &mut Criterion) {
    let rng = RngState::from_seed(11);
    let data = synth_blobs(&mut rng.substream("data"), 200, 6, 2, 1.2).unwrap();
    let groups = aggregate_coefficients(&data, 8).unwrap();
    let budget = PrivacyBudget::new(0.5, 8).unwrap();
    let trials = 20_000usize;

    let mut group = c.benchmark_group("perturbation_trials");
    group.sample_size(10);
    let work = |t: usize| {
        let mut local = rng.fork(t as u64);
        perturb(&groups, &budget, &mut local).eta0
    };
    group.bench_function(BenchmarkId::new("sequential", trials), |b| {
        b.iter(|| black_box(exec::run_seq(trials, work)))
    });
    group.bench_function(BenchmarkId::new("parallel", trials), |b| {
        b.iter(|| black_box(exec::run_par(trials, work)))
    });
    group.finish();
}

fn bench_counterfactual_batch(c: &mut Criterion) {
    let rng = RngState::from_seed(23);
    let data = synth_blobs(&mut rng.substream("data"), 150, 4, 2, 1.5).unwrap();
    let ae = AutoencoderSpec::new(vec![6, 3])
        .unwrap()
        .build(4, &mut rng.substream("ae"))
        .unwrap();
    let prototypes = build_prototypes(&ae, &data).unwrap().prototypes;
    let spec = ClassifierSpec::new(vec![8], Activation::Tanh, 2).unwrap();
    let (model, _) = train_classifier(
        &spec,
        &data,
        30,
        32,
        OptimizerKind::Adam { lr: 1e-2 },
        &rng.substream("cls"),
    )
    .unwrap();
    let config = SearchConfig::mixed(1).with_iterations(100, 0.05);
    let queries: Vec<Vec<f64>> = (0..64).map(|i| data.row(i).to_vec()).collect();

    let work = |i: usize| {
        let mut local = rng.fork(i as u64);
        search_counterfactual(&prototypes, &queries[i], &model, &ae, &config, &mut local)
            .unwrap()
            .flipped
    };

    let mut group = c.benchmark_group("counterfactual_batch");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", queries.len()), |b| {
        b.iter(|| black_box(exec::run_seq(queries.len(), work)))
    });
    group.bench_function(BenchmarkId::new("parallel", queries.len()), |b| {
        b.iter(|| black_box(exec::run_par(queries.len(), work)))
    });
    group.finish();
}

fn bench_neighbor_pair_sweep(c: &mut Criterion) {
    let rng = RngState::from_seed(31);
    let pairs = 2_000usize;

    let work = |t: usize| {
        let mut local = rng.fork(t as u64);
        let n = 1 + local.index(8);
        let d = 1 + local.index(4);
        let width = 1 + local.index(4);
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| local.uniform(-1.0, 1.0)).collect())
            .collect();
        let schema = dpc::data::FeatureSchema::dense(d, 1);
        let a = dpc::data::Dataset::new(
            dpc::numerics::Matrix::from_rows(&rows),
            vec![0; n],
            1,
            schema.clone(),
        )
        .unwrap();
        let swap = local.index(n);
        rows[swap] = (0..d).map(|_| local.uniform(-1.0, 1.0)).collect();
        let b = dpc::data::Dataset::new(
            dpc::numerics::Matrix::from_rows(&rows),
            vec![0; n],
            1,
            schema,
        )
        .unwrap();
        let ga = aggregate_coefficients(&a, width).unwrap();
        let gb = aggregate_coefficients(&b, width).unwrap();
        ga.l1_difference(&gb).unwrap() <= sensitivity_bound(width)
    };

    let mut group = c.benchmark_group("neighbor_pair_sweep");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", pairs), |b| {
        b.iter(|| black_box(exec::run_seq(pairs, work)))
    });
    group.bench_function(BenchmarkId::new("parallel", pairs), |b| {
        b.iter(|| black_box(exec::run_par(pairs, work)))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_perturbation_trials,
    bench_counterfactual_batch,
    bench_neighbor_pair_sweep
);
criterion_main!(benches);
