use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hiersim_core::analytics::{outage_probability, AreaCount};
use hiersim_core::coloring::{dsatur_color, InterferenceGraph};
use hiersim_core::deployment::deploy;
use hiersim_core::experiment::{prepare_drop, run_drop};
use hiersim_core::load::{estimate_drop_loads, estimate_load_newton, LoadSolver, NewtonOptions};
use hiersim_core::scheduling::{greedy_maxmin, schedule, LocalChannel, SchedulerKind};
use hiersim_core::{associate, ExperimentConfig};

fn stages(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let radio = cfg.radio();
    let state = prepare_drop(&cfg, 1).unwrap();
    let demands = vec![1.5e6; state.realization.user_count()];

    c.bench_function("deploy", |b| b.iter(|| deploy(&cfg.deployment(), black_box(3)).unwrap()));
    c.bench_function("prepare_drop", |b| b.iter(|| prepare_drop(&cfg, black_box(3)).unwrap()));
    c.bench_function("associate", |b| b.iter(|| associate(black_box(state.channel.avg_power())).unwrap()));

    let loads = estimate_drop_loads(&state.assoc, state.channel.avg_power(), &demands, &radio, LoadSolver::EqualPower, &cfg.newton).unwrap();
    c.bench_function("loads/equal_power", |b| {
        b.iter(|| estimate_drop_loads(&state.assoc, state.channel.avg_power(), &demands, &radio, LoadSolver::EqualPower, &cfg.newton).unwrap())
    });
    c.bench_function("loads/newton", |b| {
        b.iter(|| estimate_drop_loads(&state.assoc, state.channel.avg_power(), &demands, &radio, LoadSolver::Newton, &cfg.newton).unwrap())
    });
    let gains = [2e-7, 5e-8, 1e-8];
    c.bench_function("newton/three_users", |b| {
        b.iter(|| estimate_load_newton(&[1e6, 2e6, 0.5e6], black_box(&gains), &radio, &NewtonOptions::default()).unwrap())
    });

    let graph = InterferenceGraph::build(&state.realization.aps, cfg.d_tilde_m, &loads.loads).unwrap();
    c.bench_function("dsatur/drop_graph", |b| b.iter(|| dsatur_color(black_box(&graph), cfg.prbs).unwrap()));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = LocalChannel::equal_power(
        (0..4).map(|_| (0..12).map(|_| -rng.random::<f64>().ln() * 1e3).collect()).collect(),
        vec![1e6, 2e6, 1.5e6, 0.5e6],
        0.1,
        1e-3,
        180e3,
    )
    .unwrap();
    c.bench_function("schedule/greedy", |b| b.iter(|| greedy_maxmin(black_box(&ch))));
    c.bench_function("schedule/time_share", |b| b.iter(|| schedule(SchedulerKind::TimeShare, black_box(&ch))));

    let a = cfg.analytics();
    c.bench_function("analytics/outage", |b| b.iter(|| outage_probability(black_box(1.5e6), &a, AreaCount::Poisson)));

    let mut group = c.benchmark_group("drop");
    group.sample_size(10);
    group.bench_function("run_drop/default", |b| b.iter(|| run_drop(&cfg, black_box(7)).unwrap()));
    group.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
