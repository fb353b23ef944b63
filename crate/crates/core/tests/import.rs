mod common;

use std::fs;

use common::{plain_bed, toy_dir};
use regmap_core::harness::{build_search_store, count_data_lines, import_files, BenchOptions};

#[test]
fn toy_import_counts_and_ids() {
    let dir = toy_dir();
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "bed"))
        .collect();
    files.sort();
    assert_eq!(files.len(), 5);
    let store = import_files(&files).unwrap();
    let mut expected_total = 0;
    for f in &files {
        let want = plain_bed(f).len();
        assert_eq!(count_data_lines(f).unwrap() as usize, want);
        let name = f.file_stem().unwrap().to_str().unwrap();
        let rows = store.dataset(name).unwrap();
        assert_eq!(rows.len(), want, "{name}");
        let coords: Vec<_> = rows
            .iter()
            .map(|r| (r.region.chrom.clone(), r.region.start, r.region.end))
            .collect();
        assert_eq!(coords, plain_bed(f));
        expected_total += want;
    }
    assert_eq!(store.len(), expected_total);
    let ids: Vec<_> = store.production().iter().map(|r| r.id).collect();
    assert_eq!(ids, (1..=expected_total as u64).collect::<Vec<_>>());
    assert_eq!(store.staging_len(), 0);

    let invalid: Vec<_> = store.find_invalid().iter().map(|r| r.region.clone()).collect();
    assert_eq!(invalid.len(), 1);
    assert_eq!((invalid[0].start, invalid[0].end), (700, 600));
}

#[test]
fn seeded_invalid_rows_are_found_exactly() {
    for seed in [1, 2, 3] {
        let opts = BenchOptions {
            seed,
            ..Default::default()
        };
        let (store, seeded) = build_search_store(20_000, 24, &opts).unwrap();
        let found: Vec<_> = store.find_invalid().iter().map(|r| r.id).collect();
        assert_eq!(found, seeded);
        for row in store.find_invalid() {
            assert!(row.region.start < 0 || row.region.end < row.region.start);
        }
    }
}
