use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, criterion_group, criterion_main};
use slopewarp::pso::MedoidCache;
use slopewarp::{BsdPoint, DatasetDistance, DistanceKind, DistanceSpec, PsoConfig, SwarmState, bsd_point, dtw_bsd};
use slopewarp_bench::shapes;

fn point(c: &mut Criterion) {
    let a = BsdPoint::new(0.3, -0.2, 0.7);
    let b = BsdPoint::new(-0.1, 0.4, 0.5);
    c.bench_function("bsd_point", |bench| bench.iter(|| bsd_point(black_box(&a), black_box(&b))));
}

fn dtw(c: &mut Criterion) {
    let mut group = c.benchmark_group("dtw_bsd");
    for budget in [20, 64, 256] {
        let data = shapes(1, budget);
        let (a, b) = (&data.series[0], &data.series[1]);
        group.bench_with_input(BenchmarkId::from_parameter(budget), &budget, |bench, _| {
            bench.iter(|| dtw_bsd(black_box(a), black_box(b)))
        });
    }
    group.finish();
}

fn distances(c: &mut Criterion) {
    let data = shapes(1, 64);
    let mut group = c.benchmark_group("pair_distance");
    for kind in DistanceKind::ALL {
        let spec = DistanceSpec::new(kind);
        group.bench_function(kind.as_str(), |bench| {
            bench.iter(|| spec.between(black_box(&data.series[0]), black_box(&data.series[1])))
        });
    }
    group.finish();
}

fn swarm_step(c: &mut Criterion) {
    let data = shapes(20, 20);
    let dist = DatasetDistance::new(&data.series, DistanceSpec::new(DistanceKind::DtwBsd));
    let cache = MedoidCache::new(&dist, data.series.len());
    let cfg = PsoConfig { k: 3, ..PsoConfig::default() };
    let state = SwarmState::init(&cache, &cfg).unwrap();
    // warm the column cache so the step measures swarm arithmetic plus fitness
    let mut warm = state.clone();
    for _ in 0..50 {
        warm.step(&cache, &cfg).unwrap();
    }
    c.bench_function("pso_step_60x3", |bench| {
        bench.iter_batched(
            || warm.clone(),
            |mut s| {
                s.step(&cache, &cfg).unwrap();
                s
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, point, dtw, distances, swarm_step);
criterion_main!(benches);
