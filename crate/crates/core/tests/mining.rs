mod common;

use std::fs::File;
use std::io::BufReader;

use common::{brute_force_overlapping, percent_two_decimals, plain_bed, toy_dir};
use regmap_core::bed::load_catalog;
use regmap_core::overlap::write_mining_tsv;
use regmap_core::{import_catalog, pairwise_mining, JoinFilter, MiningRow, ParseMode};

fn mine(catalog: &str) -> Vec<MiningRow> {
    let dir = toy_dir();
    let entries = load_catalog(BufReader::new(File::open(dir.join(catalog)).unwrap())).unwrap();
    let (store, _) = import_catalog(&entries, &dir, ParseMode::Strict).unwrap();
    pairwise_mining(&entries, &store, &JoinFilter::default()).unwrap()
}

fn summary(rows: &[MiningRow]) -> Vec<(String, String, String, usize, usize, String)> {
    rows.iter()
        .map(|r| {
            (
                r.assembly.clone(),
                r.query.name.clone(),
                r.reference.name.clone(),
                r.overlapping,
                r.query_total,
                r.percentage.to_string(),
            )
        })
        .collect()
}

#[test]
fn three_dataset_catalog_hand_counts() {
    let rows = mine("hg19_catalog.tsv");
    let want = [
        ("h3k4me1_hepg2", "hnf4g_hepg2", 4, 4, "100.00"),
        ("h3k4me1_hepg2", "stag1_hepg2", 3, 4, "75.00"),
        ("hnf4g_hepg2", "h3k4me1_hepg2", 9, 10, "90.00"),
        ("hnf4g_hepg2", "stag1_hepg2", 6, 10, "60.00"),
        ("stag1_hepg2", "h3k4me1_hepg2", 5, 7, "71.43"),
        ("stag1_hepg2", "hnf4g_hepg2", 5, 7, "71.43"),
    ];
    let got = summary(&rows);
    assert_eq!(got.len(), 6);
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.0, "hg19");
        assert_eq!((g.1.as_str(), g.2.as_str(), g.3, g.4, g.5.as_str()), w);
    }
}

#[test]
fn assemblies_never_mix() {
    let rows = mine("catalog.tsv");
    assert_eq!(rows.len(), 8);
    let assemblies: Vec<_> = rows.iter().map(|r| r.assembly.as_str()).collect();
    assert_eq!(
        assemblies,
        ["hg19"; 6].iter().chain(&["mm9"; 2]).copied().collect::<Vec<_>>()
    );
    let mm9: Vec<_> = summary(&rows[6..])
        .into_iter()
        .map(|r| (r.1, r.2, r.3, r.4, r.5))
        .collect();
    assert_eq!(
        mm9,
        [
            ("ctcf_mel".into(), "gata1_mel".into(), 2, 4, "50.00".into()),
            ("gata1_mel".into(), "ctcf_mel".into(), 2, 3, "66.67".into()),
        ]
    );
    assert_eq!(rows[6].query.treatment.as_deref(), Some("DMSO"));
    assert_eq!(rows[0].query.treatment, None);
}

#[test]
fn mining_matches_brute_force() {
    let dir = toy_dir();
    let entries = load_catalog(BufReader::new(File::open(dir.join("catalog.tsv")).unwrap())).unwrap();
    let rows = mine("catalog.tsv");
    for row in &rows {
        let bed = |name: &str| {
            let e = entries.iter().find(|e| e.name == name).unwrap();
            plain_bed(&dir.join(&e.path))
        };
        let (hits, total) = brute_force_overlapping(&bed(&row.query.name), &bed(&row.reference.name), 1);
        assert_eq!((row.overlapping, row.query_total), (hits, total), "{row:?}");
        assert_eq!(row.percentage.to_string(), percent_two_decimals(hits, total));
    }
}

#[test]
fn mining_tsv_layout() {
    let rows = mine("hg19_catalog.tsv");
    let mut out = Vec::new();
    write_mining_tsv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(
        lines[1],
        "hg19\th3k4me1_hepg2\tH3K4Me1\tHepG2\t\thnf4g_hepg2\tHNF4G\tHepG2\t\t4\t4\t100.00"
    );
    assert!(lines[1..].iter().all(|l| l.split('\t').count() == 12));
}
