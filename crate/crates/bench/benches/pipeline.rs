use std::hint::black_box;

use articulate::kabsch::{kabsch_fit, CorrespondenceSet};
use articulate::metrics::chamfer_distance;
use articulate::ransac::fit_one_model;
use articulate::synth::builtin_scene;
use articulate::{analyze, generate, AnalysisConfig, RansacConfig, TrajectorySet};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn scene(name: &str, points: usize, frames: usize) -> TrajectorySet {
    let spec = builtin_scene(name)
        .unwrap()
        .with_points_per_part(points)
        .with_frames(frames);
    generate(&spec).unwrap().0
}

fn kabsch(c: &mut Criterion) {
    let traj = scene("oven-101917", 2000, 3);
    let mut group = c.benchmark_group("kabsch_fit");
    for n in [3, 100, 10_000] {
        let corr = CorrespondenceSet::new(
            traj.positions_at(0.0).unwrap()[..n].to_vec(),
            traj.positions_at(1.0).unwrap()[..n].to_vec(),
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &corr, |b, corr| {
            b.iter(|| kabsch_fit(black_box(corr)).unwrap())
        });
    }
    group.finish();
}

fn one_model(c: &mut Criterion) {
    let traj = scene("fridge-11304", 1000, 21);
    let cfg = RansacConfig::default();
    c.bench_function("fit_one_model/fridge-11304", |b| {
        b.iter(|| fit_one_model(black_box(&traj), &cfg).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    for name in ["oven-101917", "table-31249"] {
        let traj = scene(name, 1000, 51);
        let cfg = AnalysisConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(name), &traj, |b, traj| {
            b.iter(|| analyze(black_box(traj), &cfg).unwrap())
        });
    }
    group.finish();
}

fn chamfer(c: &mut Criterion) {
    let traj = scene("oven-101917", 5000, 2);
    let (x, y) = (
        traj.positions_at(0.0).unwrap(),
        traj.positions_at(1.0).unwrap(),
    );
    c.bench_function("chamfer/25k", |b| {
        b.iter(|| chamfer_distance(black_box(&x), black_box(&y)).unwrap())
    });
}

criterion_group!(benches, kabsch, one_model, pipeline, chamfer);
criterion_main!(benches);
