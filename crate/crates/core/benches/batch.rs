use cohtrack::bloch::gks_to_channel;
use cohtrack::integrate::{IntegratorConfig, TimeGrid};
use cohtrack::random;
use cohtrack::sweep::{propagate_batch, sweep_breakdown, Axis, Execution, Job};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] =
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_breakdown_400x400");
    let axis = Axis::new(0.0025, 1.0, 400).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep_breakdown(0.1, black_box(&axis), &axis, exec).unwrap())
        });
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let mut rng = random::rng(1);
    let jobs: Vec<Job> = (0..64)
        .map(|_| Job {
            channel: gks_to_channel(&random::gks(&mut rng, 1.0)).1,
            waveform: random::piecewise_fields(&mut rng, 5.0, 6, 3.0),
            v0: random::state(&mut rng),
        })
        .collect();
    let grid = TimeGrid::new(5.0, 0.05).unwrap();
    let cfg = IntegratorConfig::default();
    let mut group = c.benchmark_group("propagate_batch_64");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| propagate_batch(black_box(&jobs), &grid, &cfg, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, batch);
criterion_main!(benches);
