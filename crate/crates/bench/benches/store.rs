use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

use regmap_core::harness::{build_search_store, generate_regions, BenchOptions, GenConfig};
use regmap_core::store::to_raw;
use regmap_core::{RegionStore, SharedStore};

fn insertion(c: &mut Criterion) {
    let mut group = c.benchmark_group("insertion");
    group.sample_size(10);
    for n in [5_000usize, 20_000] {
        let rows = to_raw(
            &generate_regions(&GenConfig {
                count: n,
                ..GenConfig::default()
            })
            .unwrap(),
        );
        group.bench_with_input(BenchmarkId::new("batch", n), &n, |bench, _| {
            bench.iter_batched(
                || (SharedStore::new(), rows.clone()),
                |(store, rows)| store.insert_regions_batch("random", rows).unwrap(),
                BatchSize::LargeInput,
            )
        });
        group.bench_with_input(BenchmarkId::new("rowwise", n), &n, |bench, _| {
            bench.iter_batched(
                || (SharedStore::new(), rows.clone()),
                |(store, rows)| store.insert_regions_rowwise("random", rows).unwrap(),
                BatchSize::LargeInput,
            )
        });
        group.bench_with_input(BenchmarkId::new("import", n), &n, |bench, _| {
            bench.iter_batched(
                || (RegionStore::new(), rows.clone()),
                |(mut store, rows)| store.import_dataset("random", rows).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    let (mut store, _) = build_search_store(1_000_000, 24, &BenchOptions::default()).unwrap();
    group.bench_function("invalid", |bench| bench.iter(|| store.find_invalid()));
    store.drop_index();
    group.bench_function("proximity_scan", |bench| {
        bench.iter(|| store.proximity_search("chr8", 128_748_314, 100_000))
    });
    store.build_index();
    group.bench_function("proximity_indexed", |bench| {
        bench.iter(|| store.proximity_search("chr8", 128_748_314, 100_000))
    });
    group.finish();
}

criterion_group!(benches, insertion, search);
criterion_main!(benches);
