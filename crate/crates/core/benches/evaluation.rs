//! Sequential against parallel evaluation. Build with
//! `--no-default-features` to see the fallback alone; then both modes run
//! sequentially.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netrestore::optimizer::{evaluate_schedule_with, optimize_with, Evaluator};
use netrestore::par::{self, ExecMode};
use netrestore::sim::greedy_baseline;
use netrestore::{GridCase, ObjectiveConfig, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn genome_batch(c: &mut Criterion) {
    let case = GridCase::ieee39();
    let cfg = ObjectiveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let genomes: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..case.lines().len()).map(|_| rng.gen()).collect())
        .collect();
    let mut group = c.benchmark_group("ieee39_genomes_x8");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                // a fresh cache per batch so every evaluation is cold
                let ev = Evaluator::new(&case, cfg);
                black_box(par::map(mode, &genomes, |g| ev.evaluate_genome(g).objective))
            })
        });
    }
    group.finish();
}

fn baseline_report(c: &mut Criterion) {
    let case = GridCase::ieee39();
    let cfg = ObjectiveConfig::default();
    let seq = greedy_baseline(&case);
    let mut group = c.benchmark_group("ieee39_baseline_report");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(evaluate_schedule_with(&case, &seq, &cfg, mode).unwrap().objective))
        });
    }
    group.finish();
}

fn small_search(c: &mut Criterion) {
    let case = GridCase::ieee39();
    let ocfg = ObjectiveConfig::default();
    let scfg = SearchConfig {
        population: 8,
        generations: 2,
        ..Default::default()
    };
    let mut group = c.benchmark_group("ieee39_search_8x2");
    group.sample_size(10).measurement_time(Duration::from_secs(30));
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(optimize_with(&case, &ocfg, &scfg, mode).best.objective))
        });
    }
    group.finish();
}

criterion_group!(benches, genome_batch, baseline_report, small_search);
criterion_main!(benches);
