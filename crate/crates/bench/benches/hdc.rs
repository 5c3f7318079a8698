use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use hdstream_bench::random_hvs;
use hdstream_core::{bundle, ItemMemory, Lfsr32};

fn hamming(c: &mut Criterion) {
    let mut group = c.benchmark_group("hamming");
    for dim in [1024usize, 4096, 16384] {
        let hvs = random_hvs(2, dim, 7);
        group.throughput(Throughput::Elements(dim as u64));
        group.bench_with_input(BenchmarkId::from_parameter(dim), &hvs, |b, hvs| {
            b.iter(|| black_box(&hvs[0]).hamming(black_box(&hvs[1])).unwrap())
        });
    }
    group.finish();
}

fn bundling(c: &mut Criterion) {
    let hvs = random_hvs(33, 4096, 11);
    c.bench_function("bundle/33x4096", |b| b.iter(|| bundle(black_box(&hvs)).unwrap()));
}

fn encoding(c: &mut Criterion) {
    let mut rng = Lfsr32::new(3).unwrap();
    let mut mem = ItemMemory::build(&mut rng, 4096, 16, 32).unwrap();
    let warmup: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..32).map(|_| rng.next_gaussian()).collect())
        .collect();
    mem.calibrate(&warmup).unwrap();
    c.bench_function("encode/F32_D4096", |b| {
        b.iter(|| mem.encode(black_box(&warmup[5])).unwrap())
    });
}

criterion_group!(benches, hamming, bundling, encoding);
criterion_main!(benches);
