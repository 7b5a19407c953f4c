use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hulksmash::smash::{group_instances, similarity};
use hulksmash_bench::{random_ash, random_instances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_similarity(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, b) = (random_ash(&mut rng, 0.2), random_ash(&mut rng, 0.2));
    c.bench_function("ash_similarity", |bench| {
        bench.iter(|| similarity(black_box(&a), black_box(&b)).unwrap())
    });
}

fn bench_grouping(c: &mut Criterion) {
    let mut group = c.benchmark_group("group_instances");
    for n in [4, 16, 64] {
        let instances = random_instances(n as u64, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &instances, |bench, inst| {
            bench.iter(|| group_instances(black_box(inst)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_similarity, bench_grouping);
criterion_main!(benches);
