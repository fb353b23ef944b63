#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use regmap_core::sqlgen::{ScriptKind, ScriptParams, SqlDialect};
use regmap_core::{GenomicRegion, HalfBp, JoinFilter};

pub const BLESS_VAR: &str = "REGMAP_BLESS_GOLDENS";

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn golden_params() -> ScriptParams {
    let region = |c: &str, s, e| GenomicRegion::new(c, s, e).unwrap();
    ScriptParams {
        filter: JoinFilter::new(1, Some(HalfBp::from_bp(1000))),
        insert_regions: vec![
            region("chr1", 0, 500),
            region("chr1", 1000, 1250),
            region("chr8", 128_748_000, 128_748_600),
        ],
        ..ScriptParams::default()
    }
}

/// Every (kind, dialect) script as `(file name, text)`.
pub fn emitted_scripts() -> Vec<(String, String)> {
    let params = golden_params();
    let mut out = Vec::new();
    for kind in ScriptKind::ALL {
        for dialect in SqlDialect::ALL {
            let script = regmap_core::sqlgen::emit(kind, dialect, &params).unwrap();
            out.push((script.file_name(), script.text()));
        }
    }
    out
}

/// Compares every emitted script with its golden file; rewrites them when
/// `REGMAP_BLESS_GOLDENS` is set. Returns the mismatching file names.
pub fn check_goldens() -> Vec<String> {
    let bless = std::env::var_os(BLESS_VAR).is_some();
    let dir = golden_dir();
    let mut bad = Vec::new();
    for (name, text) in emitted_scripts() {
        let path = dir.join(&name);
        if bless {
            fs::write(&path, &text).unwrap();
            continue;
        }
        match fs::read_to_string(&path) {
            Ok(golden) if golden == text => {}
            _ => bad.push(name),
        }
    }
    bad
}

/// `(chrom, start, end)` of every data line, split by hand.
pub fn plain_bed(path: &Path) -> Vec<(String, i64, i64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| {
            let t = l.trim();
            !(t.is_empty() || t.starts_with('#') || t.starts_with("track") || t.starts_with("browser"))
        })
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

/// O(n*m) count of query intervals sharing at least `min_bp` bases with any
/// reference interval. Rows with end < start or start < 0 are left out.
pub fn brute_force_overlapping(
    query: &[(String, i64, i64)],
    reference: &[(String, i64, i64)],
    min_bp: i64,
) -> (usize, usize) {
    let ok = |r: &&(String, i64, i64)| r.1 >= 0 && r.2 >= r.1;
    let q: Vec<_> = query.iter().filter(ok).collect();
    let hits = q
        .iter()
        .filter(|a| {
            reference
                .iter()
                .filter(ok)
                .any(|b| a.0 == b.0 && a.2.min(b.2) - a.1.max(b.1) >= min_bp)
        })
        .count();
    (hits, q.len())
}

/// `part / whole` as a percentage with two decimals, halves rounded up.
pub fn percent_two_decimals(part: usize, whole: usize) -> String {
    if whole == 0 {
        return "0.00".to_string();
    }
    let scaled = part as u128 * 10_000;
    let (mut q, r) = (scaled / whole as u128, scaled % whole as u128);
    if 2 * r >= whole as u128 {
        q += 1;
    }
    format!("{}.{:02}", q / 100, q % 100)
}
