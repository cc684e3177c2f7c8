use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rdseg_bench::{wavy_field, wavy_vector_field};
use rdseg_core::{divergence, gradient, pointwise_norm, total_variation};

fn operators(c: &mut Criterion) {
    let u = wavy_field(128, 128);
    let p = wavy_vector_field(128, 128);
    c.bench_function("gradient/128", |b| b.iter(|| gradient(black_box(&u))));
    c.bench_function("divergence/128", |b| b.iter(|| divergence(black_box(&p))));
    c.bench_function("pointwise_norm/128", |b| {
        b.iter(|| pointwise_norm(black_box(&p)))
    });
    c.bench_function("total_variation/128", |b| {
        b.iter(|| total_variation(black_box(&u)))
    });
}

criterion_group!(benches, operators);
criterion_main!(benches);
