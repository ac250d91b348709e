use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gossipsim_bench::{linear_dataset, symmetric_setup};
use gossipsim_core::learning::{gradient, local_update, LossEvaluator};
use gossipsim_core::{HyperParams, PredictorKind, Purpose, RngStream, Scheme, Simulation};
use std::hint::black_box;

fn staleness_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("staleness_event_loop");
    for n in [16usize, 128] {
        let lambda = (n as f64).ln();
        for scheme in [Scheme::Uniform, Scheme::Opportunistic] {
            let horizon = 100.0;
            // Rough event count, for throughput in events per second.
            let events = (n as f64 * (1.0 + lambda) * horizon) as u64;
            group.throughput(Throughput::Elements(events));
            group.bench_with_input(BenchmarkId::new(scheme.to_string(), n), &n, |b, &n| {
                b.iter(|| {
                    let mut sim = Simulation::new(symmetric_setup(n, lambda, scheme)).unwrap();
                    sim.run_until(horizon).unwrap();
                    black_box(sim.staleness_summary(horizon).unwrap().mean)
                })
            });
        }
    }
    group.finish();
}

fn learning_kernels(c: &mut Criterion) {
    let dim = 100;
    let ds = linear_dataset(1, dim);
    let kind = PredictorKind::Linear { dim };
    let shard = &ds.shards[0].samples;
    let theta = vec![0.1; dim];
    let hyper = HyperParams::default();

    c.bench_function("gradient_full_shard", |b| {
        b.iter(|| black_box(gradient(kind, black_box(&theta), shard.rows()).unwrap()))
    });
    c.bench_function("local_update_minibatch", |b| {
        let mut rng = RngStream::new(1, 0, Purpose::Sgd);
        b.iter(|| {
            black_box(local_update(kind, &theta, shard, &hyper, hyper.alpha, &mut rng).unwrap())
        })
    });
    let eval = LossEvaluator::new(dim, shard.rows()).unwrap();
    c.bench_function("gram_loss", |b| {
        b.iter(|| black_box(eval.loss(kind, black_box(&theta)).unwrap()))
    });
}

fn training_run(c: &mut Criterion) {
    let n = 10;
    let ds = linear_dataset(n, 100);
    c.bench_function("train_10_nodes_50_time_units", |b| {
        b.iter(|| {
            let setup = symmetric_setup(n, (n as f64).ln(), Scheme::Uniform);
            let mut sim = Simulation::with_training(setup, &ds, HyperParams::default()).unwrap();
            sim.run_until(50.0).unwrap();
            black_box(sim.total_updates())
        })
    });
}

criterion_group!(benches, staleness_loop, learning_kernels, training_run);
criterion_main!(benches);
