use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wsig_core::eros::{self, decompose, eros_distance, WeightOptions};
use wsig_core::retrieval::pr_curve_from_matrix;
use wsig_core::synthetic::{SyntheticGenerator, SyntheticSpec};

fn bench(c: &mut Criterion) {
    let db = SyntheticGenerator::new(SyntheticSpec::default())
        .unwrap()
        .database()
        .unwrap();
    let samples = db.samples();
    let (w, dm) = eros::database_distances(&db, WeightOptions::default()).unwrap();
    let a = decompose(&samples[0]).unwrap();
    let b = decompose(&samples[40]).unwrap();

    c.bench_function("decompose n=29", |bench| {
        bench.iter(|| decompose(black_box(&samples[0])).unwrap())
    });
    c.bench_function("eros_distance n=29", |bench| {
        bench.iter(|| eros_distance(black_box(&a), black_box(&b), &w).unwrap())
    });
    let mut group = c.benchmark_group("database");
    group.sample_size(10);
    group.bench_function("distance matrix 81 samples", |bench| {
        bench.iter(|| eros::database_distances(black_box(&db), WeightOptions::default()).unwrap())
    });
    group.bench_function("pr_curve maxr=5 from matrix", |bench| {
        bench.iter(|| pr_curve_from_matrix(black_box(&dm), 5).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
