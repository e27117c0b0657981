use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quasilhd::designgen::{enumerate_points, find_delta, generate, scale_for};
use quasilhd::lattices::{shortest_vector_length, BaseLattice, SHORTEST_VECTOR_BOX};
use quasilhd::metrics::{fill_estimate, min_projected_separation_all};
use quasilhd::rotations::{build, sample_spec};
use quasilhd::GeneratorMatrix;

fn rotated(p: usize, seed: u64) -> GeneratorMatrix {
    let base = BaseLattice::DensestPacking;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = sample_spec(p, base, &mut rng).unwrap();
    base.generator(p).unwrap().rotated(&build(&spec).unwrap(), base, spec).unwrap()
}

fn bench_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_points");
    for (p, n) in [(2, 1000), (4, 1000), (8, 1000)] {
        let g = rotated(p, 1);
        let h = scale_for(&g, n);
        let delta = vec![0.123; p];
        group.bench_with_input(BenchmarkId::from_parameter(format!("p{p}_n{n}")), &g, |b, g| {
            b.iter(|| enumerate_points(black_box(g), h, &delta).unwrap())
        });
    }
    group.finish();
}

fn bench_find_delta(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_delta");
    for (p, n) in [(2, 500), (4, 500), (6, 500)] {
        let g = rotated(p, 2);
        group.bench_with_input(BenchmarkId::from_parameter(format!("p{p}_n{n}")), &g, |b, g| {
            b.iter(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                find_delta(black_box(g), n, &mut rng, 100_000).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    for (p, n) in [(2, 400), (4, 400), (6, 200)] {
        let d = generate(&rotated(p, 4), n, None, 5).unwrap().points;
        group.bench_with_input(BenchmarkId::new("min_projected_separation_all", format!("p{p}_n{n}")), &d, |b, d| {
            b.iter(|| min_projected_separation_all(black_box(d)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fill_estimate_4096", format!("p{p}_n{n}")), &d, |b, d| {
            b.iter(|| fill_estimate(black_box(d), 4096).unwrap())
        });
    }
    group.finish();
}

fn bench_shortest_vector(c: &mut Criterion) {
    let mut group = c.benchmark_group("shortest_vector_length");
    for p in [4, 6, 8] {
        let g = rotated(p, 6);
        group.bench_with_input(BenchmarkId::from_parameter(p), &g, |b, g| {
            b.iter(|| shortest_vector_length(black_box(g), SHORTEST_VECTOR_BOX))
        });
    }
    group.finish();
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_enumeration, bench_find_delta, bench_metrics, bench_shortest_vector
}
criterion_main!(kernels);
