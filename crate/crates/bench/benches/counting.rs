use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hashcount_core::generate::random_kcnf;
use hashcount_core::oracle::bounded_count;
use hashcount_core::{compute_iter, count, CountMode, CountParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn planner(c: &mut Criterion) {
    c.bench_function("compute_iter eps=0.8 delta=0.001", |b| {
        b.iter(|| compute_iter(std::hint::black_box(0.8), 0.001).unwrap())
    });
}

fn enumeration(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_kcnf(30, 60, 3, &mut rng);
    c.bench_function("bounded_count thresh=72 n=30", |b| {
        b.iter(|| bounded_count(&f, &[], 72).unwrap())
    });
}

fn modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("count");
    group.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_kcnf(24, 40, 3, &mut rng);
    for mode in [CountMode::Rounding, CountMode::Classic] {
        group.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &mode| {
            b.iter(|| count(&f, &CountParams::new(0.8, 0.001, mode, 3)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, planner, enumeration, modes);
criterion_main!(benches);
