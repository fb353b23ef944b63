//! Seeded data generation and timed workload scenarios.
//!
//! Four scenario families are covered: insertion (batch vs row-wise),
//! staging import of BED files, overlap joins, and search (invalid rows and
//! proximity with and without an index). The native engine always runs;
//! database backends run when configured. Correctness cross-checks are
//! recorded separately from timings and never depend on them.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bed::{parse_bed, BedError, ParseMode};
use crate::db::{BackendConfig, DbError, ScriptOutcome, Session};
use crate::intervals::{centre_distance_sql_compat, GenomicRegion, RawRegion, RegionError};
use crate::overlap::{geo_intersect_join, nested_loop_join, sweep_join, IdRegion, JoinError, JoinFilter, OverlapPair};
use crate::sqlgen::{
    emit_batch_insert, emit_bulk_import, emit_geo_query, emit_invalid_search, emit_proximity_search, emit_random_gen,
    emit_regmap_query, emit_rowwise_insert, DatasetPair, ProximityParams, RandomGenParams, SqlGenError,
};
use crate::store::{to_raw, RegionId, RegionStore, SharedStore, StoreError};

pub const DEFAULT_CHROMOSOMES: [&str; 23] = [
    "chr1", "chr2", "chr3", "chr4", "chr5", "chr6", "chr7", "chr8", "chr9", "chr10", "chr11", "chr12", "chr13",
    "chr14", "chr15", "chr16", "chr17", "chr18", "chr19", "chr20", "chr21", "chr22", "chrX",
];

/// Region counts used for the insertion and overlap scenarios by default.
pub const DEFAULT_SIZES: [u64; 5] = [5_000, 10_000, 20_000, 40_000, 80_000];

/// Hardware and server versions the reference timings in report headers
/// were measured on.
pub const REFERENCE_SETUP: &str = "4-core 2.4 GHz, 8 GB, postgres 9.0, mysql 5.6.15";

/// Largest per-side size the nested-loop join is timed at.
pub const NESTED_LOOP_CAP: u64 = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error(transparent)]
    Bed(#[from] BedError),
    #[error(transparent)]
    Sql(#[from] SqlGenError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed report: {0}")]
    Report(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    pub chromosomes: Vec<String>,
    pub coord_lower: i64,
    pub coord_upper: i64,
    pub max_size: u64,
    /// Every region is exactly `max_size` long instead of uniform in `1..=max_size`.
    pub fixed_size: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            count: 5000,
            chromosomes: DEFAULT_CHROMOSOMES.iter().map(|c| c.to_string()).collect(),
            coord_lower: 0,
            coord_upper: 200_000_000,
            max_size: 500,
            fixed_size: false,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.chromosomes.is_empty() {
            return Err(HarnessError::Config("chromosome list is empty".into()));
        }
        if self.max_size < 1 {
            return Err(HarnessError::Config("max_size must be at least 1".into()));
        }
        if self.coord_lower < 0 {
            return Err(HarnessError::Config("coord_lower must be non-negative".into()));
        }
        let range = self.coord_upper.checked_sub(self.coord_lower);
        if range.is_none_or(|r| r <= self.max_size as i64) {
            return Err(HarnessError::Config(format!(
                "coord_upper - coord_lower must exceed max_size ({} - {} vs {})",
                self.coord_upper, self.coord_lower, self.max_size
            )));
        }
        Ok(())
    }
}

/// `count` regions: chromosome uniform over the list, length uniform in
/// `1..=max_size` (or fixed), start uniform in `[coord_lower, coord_upper - length]`.
/// The output depends only on the config, including the seed.
pub fn generate_regions(config: &GenConfig) -> Result<Vec<GenomicRegion>, HarnessError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let max = config.max_size as i64;
    (0..config.count)
        .map(|_| {
            let chrom = &config.chromosomes[rng.gen_range(0..config.chromosomes.len())];
            let len = if config.fixed_size { max } else { rng.gen_range(1..=max) };
            let start = rng.gen_range(config.coord_lower..=config.coord_upper - len);
            Ok(GenomicRegion::new(chrom.clone(), start, start + len)?)
        })
        .collect()
}

/// Tags regions with consecutive ids starting at `first_id`.
pub fn with_ids(regions: Vec<GenomicRegion>, first_id: RegionId) -> Vec<IdRegion> {
    regions
        .into_iter()
        .zip(first_id..)
        .map(|(r, id)| IdRegion::new(id, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub backend: String,
    pub size: u64,
    pub reps: u32,
    pub mean_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Free-text header lines: reference timings, skipped backends, errors,
    /// ordinal observations.
    pub context: Vec<String>,
    pub checks: Vec<Check>,
    pub rows: Vec<BenchRow>,
}

impl BenchmarkReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn row(&self, scenario: &str, backend: &str, size: u64) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.backend == backend && r.size == size)
    }

    pub fn merge(&mut self, other: BenchmarkReport) {
        self.context.extend(other.context);
        self.checks.extend(other.checks);
        self.rows.extend(other.rows);
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub reps: u32,
    /// Discarded repetitions run before the timed ones.
    pub warmup: u32,
    pub seed: u64,
    pub max_size: u64,
    pub fixed_size: bool,
    pub backends: Vec<BackendConfig>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            reps: 3,
            warmup: 1,
            seed: 42,
            max_size: 500,
            fixed_size: false,
            backends: Vec::new(),
        }
    }
}

impl BenchOptions {
    fn gen(&self, seed: u64, count: u64) -> GenConfig {
        GenConfig {
            seed,
            count: count as usize,
            max_size: self.max_size,
            fixed_size: self.fixed_size,
            ..GenConfig::default()
        }
    }

    /// Opens a session per enabled backend; disabled or unreachable ones are
    /// noted in the report context.
    fn sessions(&self, report: &mut BenchmarkReport) -> Vec<Session> {
        let mut out = Vec::new();
        for cfg in &self.backends {
            if !cfg.enabled() {
                log::info!("{} disabled, {} not set", cfg.name(), cfg.env_var());
                report
                    .context
                    .push(format!("skipped: {} ({} not set)", cfg.name(), cfg.env_var()));
                continue;
            }
            match Session::connect(cfg) {
                Ok(Some(s)) => out.push(s),
                Ok(None) => {}
                Err(e) => {
                    log::warn!("{}: {e}", cfg.name());
                    report.context.push(format!("error: {}: {e}", cfg.name()));
                }
            }
        }
        out
    }
}

/// Mixes a scenario label into the base seed so datasets are independent.
fn derive_seed(base: u64, salt: u64) -> u64 {
    base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, Copy)]
struct Timing {
    mean: f64,
    min: f64,
    max: f64,
}

/// Runs `warmup + reps` repetitions; `rep` receives the repetition index
/// (warm-ups first) and returns the time of its measured section.
fn time_reps<E>(reps: u32, warmup: u32, mut rep: impl FnMut(u32) -> Result<Duration, E>) -> Result<Timing, E> {
    for i in 0..warmup {
        rep(i)?;
    }
    let mut samples = Vec::with_capacity(reps.max(1) as usize);
    for i in 0..reps.max(1) {
        samples.push(rep(warmup + i)?.as_secs_f64());
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(0.0, f64::max);
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(Timing {
        mean: mean.clamp(min, max),
        min,
        max,
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

fn push_row(report: &mut BenchmarkReport, scenario: &str, backend: &str, size: u64, reps: u32, t: Timing) {
    report.rows.push(BenchRow {
        scenario: scenario.into(),
        backend: backend.into(),
        size,
        reps: reps.max(1),
        mean_s: t.mean,
        min_s: t.min,
        max_s: t.max,
    });
}

fn note_ordinal(report: &mut BenchmarkReport, label: &str, slow: &str, fast: &str, backend: &str, size: u64) {
    let (Some(s), Some(f)) = (report.row(slow, backend, size), report.row(fast, backend, size)) else {
        return;
    };
    let ratio = if f.mean_s > 0.0 {
        s.mean_s / f.mean_s
    } else {
        f64::INFINITY
    };
    report.context.push(format!(
        "ordinal: {label} {backend} size={size}: {slow}/{fast} = {ratio:.2}x"
    ));
}

pub fn run_insertion_bench(sizes: &[u64], opts: &BenchOptions) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    report.context.push(format!(
        "reference ({REFERENCE_SETUP}; 5000 regions): postgres 1 s, mysql_innodb 219 s, mysql_myisam 237 s"
    ));
    report.context.push(format!(
        "reference ({REFERENCE_SETUP}; 80000 regions): postgres 4 s, mysql_innodb 3596 s, mysql_myisam 3680 s"
    ));
    let mut sessions = opts.sessions(&mut report);

    for &size in sizes {
        let data = |rep: u32| generate_regions(&opts.gen(derive_seed(opts.seed, size + rep as u64), size));

        let batch = time_reps(opts.reps, opts.warmup, |rep| -> Result<Duration, HarnessError> {
            let rows = to_raw(&data(rep)?);
            let store = SharedStore::new();
            let (res, t) = timed(|| store.insert_regions_batch("random", rows));
            res?;
            Ok(t)
        });
        let rowwise = time_reps(opts.reps, opts.warmup, |rep| -> Result<Duration, HarnessError> {
            let rows = to_raw(&data(rep)?);
            let store = SharedStore::new();
            let (res, t) = timed(|| store.insert_regions_rowwise("random", rows));
            res?;
            Ok(t)
        });
        match (batch, rowwise) {
            (Ok(b), Ok(r)) => {
                push_row(&mut report, "insertion_batch", "native", size, opts.reps, b);
                push_row(&mut report, "insertion_rowwise", "native", size, opts.reps, r);
                note_ordinal(
                    &mut report,
                    "insertion",
                    "insertion_rowwise",
                    "insertion_batch",
                    "native",
                    size,
                );
            }
            (Err(e), _) | (_, Err(e)) => report.context.push(format!("error: native insertion size={size}: {e}")),
        }

        // same final state through both paths
        let state = data(0).map_err(|e| e.to_string()).and_then(|regions| {
            let rows = to_raw(&regions);
            let mut a = RegionStore::new();
            let mut b = RegionStore::new();
            a.insert_regions_batch("random", rows.clone())
                .map_err(|e| e.to_string())?;
            b.insert_regions_rowwise("random", rows).map_err(|e| e.to_string())?;
            Ok(a.production() == b.production() && a.len() as u64 == size)
        });
        report.check(
            format!("insertion size={size}: batch and rowwise stores identical"),
            state == Ok(true),
            format!("{state:?}"),
        );

        for session in &mut sessions {
            let name = session.dialect().tag();
            let mut run = |scenario: &str, make: &dyn Fn(&[GenomicRegion]) -> Result<_, SqlGenError>| {
                let mut counts = Vec::new();
                let timing = time_reps(opts.reps, opts.warmup, |rep| -> Result<Duration, HarnessError> {
                    let script = make(&data(rep)?)?;
                    session.reset_schema()?;
                    let (res, t) = timed(|| session.execute_script(&script));
                    res?;
                    counts.push(session.count_regions()?);
                    Ok(t)
                });
                match timing {
                    Ok(t) => {
                        push_row(&mut report, scenario, name, size, opts.reps, t);
                        let ok = counts.iter().all(|&c| c == size);
                        report.check(
                            format!("{scenario} {name} size={size}: row count"),
                            ok,
                            format!("{counts:?}"),
                        );
                    }
                    Err(e) => report
                        .context
                        .push(format!("error: {scenario} {name} size={size}: {e}")),
                }
            };
            let dialect = session_dialect(name);
            run("insertion_batch", &|r| emit_batch_insert(dialect, 1, r));
            run("insertion_rowwise", &|r| emit_rowwise_insert(dialect, 1, r));
            let gen = time_reps(opts.reps, opts.warmup, |_| -> Result<Duration, HarnessError> {
                let script = emit_random_gen(
                    dialect,
                    &RandomGenParams {
                        count: size,
                        max_size: opts.max_size,
                        fixed_size: opts.fixed_size,
                        ..Default::default()
                    },
                )?;
                session.reset_schema()?;
                let (res, t) = timed(|| session.execute_script(&script));
                res?;
                Ok(t)
            });
            match gen {
                Ok(t) => push_row(&mut report, "insertion_generate", name, size, opts.reps, t),
                Err(e) => report
                    .context
                    .push(format!("error: insertion_generate {name} size={size}: {e}")),
            }
            note_ordinal(
                &mut report,
                "insertion",
                "insertion_rowwise",
                "insertion_batch",
                name,
                size,
            );
        }
    }
    report
}

fn session_dialect(tag: &str) -> crate::sqlgen::SqlDialect {
    tag.parse().expect("session dialect tags round-trip")
}

/// Data lines of a BED-like file, counted without the parser.
pub fn count_data_lines(path: &Path) -> io::Result<u64> {
    let reader = BufReader::new(File::open(path)?);
    let mut n = 0;
    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let skip =
            line.trim().is_empty() || line.starts_with('#') || line.starts_with("track") || line.starts_with("browser");
        if !skip {
            n += 1;
        }
    }
    Ok(n)
}

fn read_bed(path: &Path) -> Result<(Vec<RawRegion>, usize), HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (regions, report) = parse_bed(BufReader::new(file), ParseMode::Permissive)?;
    Ok((regions, report.rejected))
}

/// Dataset name for a file: its stem, made unique by a numeric suffix.
pub fn dataset_names(files: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    files
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            let mut name = stem.clone();
            let mut k = 2;
            while !seen.insert(name.clone()) {
                name = format!("{stem}_{k}");
                k += 1;
            }
            name
        })
        .collect()
}

/// Server-side bulk loaders take exactly three tab-separated columns; writes
/// the parsed rows of `path` to such a file under the temp directory.
fn plain_copy(path: &Path, index: usize) -> Result<PathBuf, HarnessError> {
    let (regions, _) = read_bed(path)?;
    let out = std::env::temp_dir().join(format!("regmap-import-{}-{index}.bed", std::process::id()));
    let io_err = |source| HarnessError::Io {
        path: out.clone(),
        source,
    };
    let mut sink = io::BufWriter::new(File::create(&out).map_err(io_err)?);
    for r in &regions {
        writeln!(sink, "{}\t{}\t{}", r.chrom, r.start, r.end).map_err(io_err)?;
    }
    sink.flush().map_err(io_err)?;
    Ok(out)
}

/// Three-step staging import of each file into one fresh store.
pub fn import_files(files: &[PathBuf]) -> Result<RegionStore, HarnessError> {
    let mut store = RegionStore::new();
    for (path, name) in files.iter().zip(dataset_names(files)) {
        let (regions, _) = read_bed(path)?;
        store.import_dataset(&name, regions)?;
    }
    Ok(store)
}

pub fn run_import_bench(files: &[PathBuf], opts: &BenchOptions) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    report
        .context
        .push(format!("reference ({REFERENCE_SETUP}; 1005 files / 23827431 regions): postgres ~445 s, mysql_innodb ~2940 s, mysql_myisam 2460 s"));
    let expected: Result<Vec<u64>, _> = files.iter().map(|p| count_data_lines(p)).collect();
    let expected = match expected {
        Ok(v) => v,
        Err(e) => {
            report.context.push(format!("error: reading import files: {e}"));
            return report;
        }
    };
    let total: u64 = expected.iter().sum();

    let timing = time_reps(opts.reps, opts.warmup, |_| -> Result<Duration, HarnessError> {
        let (store, t) = timed(|| import_files(files));
        store?;
        Ok(t)
    });
    match timing {
        Ok(t) => push_row(&mut report, "import", "native", total, opts.reps, t),
        Err(e) => report.context.push(format!("error: native import: {e}")),
    }

    match import_files(files) {
        Ok(store) => {
            let names = dataset_names(files);
            let mut counts_ok = true;
            let mut detail = Vec::new();
            for ((path, name), want) in files.iter().zip(&names).zip(&expected) {
                let got = store.dataset(name).map_or(0, |d| d.len() as u64);
                let rejected = read_bed(path).map(|(_, r)| r as u64).unwrap_or(0);
                counts_ok &= got + rejected == *want;
                detail.push(format!("{name}={got}/{want}"));
            }
            let ids: Vec<_> = store.production().iter().map(|r| r.id).collect();
            let sequential = ids.iter().copied().eq(1..=ids.len() as u64);
            report.check(
                "import native: row counts match data lines",
                counts_ok,
                detail.join(" "),
            );
            report.check(
                "import native: ids sequential from 1",
                sequential,
                format!("{} rows", ids.len()),
            );
            report.check(
                "import native: staging empty",
                store.staging_len() == 0,
                format!("staging={}", store.staging_len()),
            );
        }
        Err(e) => report.check("import native", false, e.to_string()),
    }

    let mut sessions = opts.sessions(&mut report);
    for session in &mut sessions {
        let name = session.dialect().tag();
        let dialect = session_dialect(name);
        let scripts: Result<Vec<_>, HarnessError> = files
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let plain = plain_copy(p, i)?;
                Ok(emit_bulk_import(dialect, &plain.to_string_lossy(), i as u32 + 1)?)
            })
            .collect();
        let scripts = match scripts {
            Ok(s) => s,
            Err(e) => {
                report.context.push(format!("error: import {name}: {e}"));
                continue;
            }
        };
        let mut counts = Vec::new();
        let timing = time_reps(opts.reps, opts.warmup, |_| -> Result<Duration, HarnessError> {
            session.reset_schema()?;
            let t0 = Instant::now();
            for s in &scripts {
                session.execute_script(s)?;
            }
            let t = t0.elapsed();
            counts.push(session.count_regions()?);
            Ok(t)
        });
        match timing {
            Ok(t) => {
                push_row(&mut report, "import", name, total, opts.reps, t);
                report.check(
                    format!("import {name}: row count"),
                    counts.iter().all(|&c| c == total),
                    format!("{counts:?} vs {total}"),
                );
            }
            Err(e) => report.context.push(format!("error: import {name}: {e}")),
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OverlapVariant {
    /// Native nested loop (the SQL view's semantics), capped at [`NESTED_LOOP_CAP`].
    Nested,
    Sweep,
    /// Native closed-segment boolean join.
    GeoNative,
    /// `vwregions` query on each enabled backend.
    RegmapSql,
    /// Spatial intersection query on each enabled backend.
    GeoSql,
}

impl OverlapVariant {
    pub const ALL: [OverlapVariant; 5] = [
        OverlapVariant::Nested,
        OverlapVariant::Sweep,
        OverlapVariant::GeoNative,
        OverlapVariant::RegmapSql,
        OverlapVariant::GeoSql,
    ];

    pub fn scenario(self) -> &'static str {
        match self {
            OverlapVariant::Nested => "overlap_nested",
            OverlapVariant::Sweep => "overlap_sweep",
            OverlapVariant::GeoNative | OverlapVariant::GeoSql => "overlap_geo",
            OverlapVariant::RegmapSql => "overlap_regmap",
        }
    }
}

/// Two independent seeded datasets of `size` regions; ids `1..=size` and
/// `size+1..=2*size`, as a store would assign them.
pub fn overlap_datasets(opts: &BenchOptions, size: u64) -> Result<(Vec<IdRegion>, Vec<IdRegion>), HarnessError> {
    let a = generate_regions(&opts.gen(derive_seed(opts.seed, 2 * size + 1), size))?;
    let b = generate_regions(&opts.gen(derive_seed(opts.seed, 2 * size + 2), size))?;
    Ok((with_ids(a, 1), with_ids(b, size + 1)))
}

fn parse_field<T: std::str::FromStr>(row: &[Option<String>], i: usize) -> Option<T> {
    row.get(i)?.as_deref()?.parse().ok()
}

fn load_pair_into(
    session: &mut Session,
    a: &[IdRegion],
    b: &[IdRegion],
) -> Result<(Vec<IdRegion>, Vec<IdRegion>), HarnessError> {
    let dialect = session.dialect();
    session.reset_schema()?;
    let plain = |v: &[IdRegion]| v.iter().map(|r| r.region.clone()).collect::<Vec<_>>();
    session.execute_script(&emit_batch_insert(dialect, 1, &plain(a))?)?;
    session.execute_script(&emit_batch_insert(dialect, 2, &plain(b))?)?;
    let (_, rows) = session.run("SELECT id, dataset_id, chrom, chromstart, chromend FROM regions ORDER BY id")?;
    let (mut da, mut db) = (Vec::new(), Vec::new());
    for row in rows.unwrap_or_default() {
        let parsed = (|| {
            let id: u64 = parse_field(&row, 0)?;
            let ds: u32 = parse_field(&row, 1)?;
            let chrom = row.get(2)?.clone()?;
            let region = GenomicRegion::new(chrom, parse_field(&row, 3)?, parse_field(&row, 4)?).ok()?;
            Some((ds, IdRegion::new(id, region)))
        })();
        match parsed {
            Some((1, r)) => da.push(r),
            Some((_, r)) => db.push(r),
            None => return Err(HarnessError::Report(format!("unreadable region row {row:?}"))),
        }
    }
    Ok((da, db))
}

/// Compares a `vwregions` result set with the native join: id pairs and bp
/// overlap must match exactly, centre distance must equal the truncating
/// integer form.
pub fn regmap_rows_match(
    rows: &[Vec<Option<String>>],
    native: &[OverlapPair],
    a: &[IdRegion],
    b: &[IdRegion],
) -> Result<(), String> {
    if rows.len() != native.len() {
        return Err(format!("{} rows vs {} native pairs", rows.len(), native.len()));
    }
    let lookup = |v: &[IdRegion], id| v.iter().find(|r| r.id == id).map(|r| r.region.clone());
    for (row, p) in rows.iter().zip(native) {
        let got: Option<(u64, u64, i64, u64)> = (|| {
            Some((
                parse_field(row, 0)?,
                parse_field(row, 1)?,
                parse_field(row, 3)?,
                parse_field(row, 4)?,
            ))
        })();
        let Some((a_id, b_id, bp, cd)) = got else {
            return Err(format!("unreadable row {row:?}"));
        };
        if (a_id, b_id, bp) != (p.a_id, p.b_id, p.bp_overlap) {
            return Err(format!("row {row:?} vs native {p:?}"));
        }
        let (Some(ra), Some(rb)) = (lookup(a, a_id), lookup(b, b_id)) else {
            return Err(format!("unknown ids in {row:?}"));
        };
        let want = centre_distance_sql_compat(&ra, &rb).map_err(|e| e.to_string())?;
        if cd != want {
            return Err(format!("centre distance {cd} vs {want} for {row:?}"));
        }
    }
    Ok(())
}

pub fn run_overlap_bench(sizes: &[u64], opts: &BenchOptions, variants: &[OverlapVariant]) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    report
        .context
        .push(format!("reference ({REFERENCE_SETUP}; 80000 x 80000): postgres regmap 134 s, postgres geo 257 s, mysql_innodb regmap 1119 s, mysql_myisam regmap 1150 s"));
    let filter = JoinFilter::default();
    let wants = |v| variants.contains(&v);
    let mut sessions = if wants(OverlapVariant::RegmapSql) || wants(OverlapVariant::GeoSql) {
        opts.sessions(&mut report)
    } else {
        Vec::new()
    };

    for &size in sizes {
        let (a, b) = match overlap_datasets(opts, size) {
            Ok(d) => d,
            Err(e) => {
                report.context.push(format!("error: overlap size={size}: {e}"));
                continue;
            }
        };
        let mut sweep_pairs = None;
        let mut nested_pairs = None;
        let mut geo_pairs = None;

        if wants(OverlapVariant::Nested) {
            if size <= NESTED_LOOP_CAP {
                let mut out = None;
                match time_reps(opts.reps, opts.warmup, |_| {
                    let (r, t) = timed(|| nested_loop_join(&a, &b, &filter));
                    out = Some(r?);
                    Ok::<_, JoinError>(t)
                }) {
                    Ok(t) => push_row(&mut report, "overlap_nested", "native", size, opts.reps, t),
                    Err(e) => report.context.push(format!("error: overlap_nested size={size}: {e}")),
                }
                nested_pairs = out;
            } else {
                report.context.push(format!(
                    "note: overlap_nested size={size} above cap {NESTED_LOOP_CAP}, not run"
                ));
            }
        }
        if wants(OverlapVariant::Sweep) || nested_pairs.is_some() || wants(OverlapVariant::RegmapSql) {
            let mut out = None;
            match time_reps(opts.reps, opts.warmup, |_| {
                let (r, t) = timed(|| sweep_join(&a, &b, &filter));
                out = Some(r?);
                Ok::<_, JoinError>(t)
            }) {
                Ok(t) => push_row(&mut report, "overlap_sweep", "native", size, opts.reps, t),
                Err(e) => report.context.push(format!("error: overlap_sweep size={size}: {e}")),
            }
            sweep_pairs = out;
        }
        if wants(OverlapVariant::GeoNative) || wants(OverlapVariant::GeoSql) {
            let mut out = None;
            match time_reps(opts.reps, opts.warmup, |_| {
                let (r, t) = timed(|| geo_intersect_join(&a, &b));
                out = Some(r?);
                Ok::<_, JoinError>(t)
            }) {
                Ok(t) => push_row(&mut report, "overlap_geo", "native", size, opts.reps, t),
                Err(e) => report.context.push(format!("error: overlap_geo size={size}: {e}")),
            }
            geo_pairs = out;
        }

        if let (Some(n), Some(s)) = (&nested_pairs, &sweep_pairs) {
            report.check(
                format!("overlap size={size}: nested == sweep"),
                n == s,
                format!("nested={} sweep={}", n.len(), s.len()),
            );
        }
        if let (Some(g), Some(s)) = (&geo_pairs, &sweep_pairs) {
            report.check(
                format!("overlap size={size}: geo count >= regmap count"),
                g.len() >= s.len(),
                format!("geo={} regmap={}", g.len(), s.len()),
            );
        }

        for session in &mut sessions {
            let name = session.dialect().tag();
            let dialect = session.dialect();
            let (da, db) = match load_pair_into(session, &a, &b) {
                Ok(v) => v,
                Err(e) => {
                    report
                        .context
                        .push(format!("error: overlap load {name} size={size}: {e}"));
                    continue;
                }
            };
            let pair = DatasetPair::default();
            if wants(OverlapVariant::RegmapSql) {
                let script = emit_regmap_query(dialect, &filter, pair);
                let mut last = None;
                match time_reps(opts.reps, opts.warmup, |_| {
                    let (r, t) = timed(|| session.execute_script(&script));
                    last = Some(r?);
                    Ok::<_, DbError>(t)
                }) {
                    Ok(t) => {
                        push_row(&mut report, "overlap_regmap", name, size, opts.reps, t);
                        let rows = last.as_ref().map(ScriptOutcome::rows).unwrap_or_default();
                        let native = sweep_join(&da, &db, &filter).unwrap_or_default();
                        let verdict = regmap_rows_match(rows, &native, &da, &db);
                        report.check(
                            format!("overlap_regmap {name} size={size}: equals native join"),
                            verdict.is_ok(),
                            verdict.err().unwrap_or_else(|| format!("{} pairs", native.len())),
                        );
                    }
                    Err(e) => report
                        .context
                        .push(format!("error: overlap_regmap {name} size={size}: {e}")),
                }
            }
            if wants(OverlapVariant::GeoSql) {
                let script = emit_geo_query(dialect, pair);
                let mut last = None;
                match time_reps(opts.reps, opts.warmup, |_| {
                    let (r, t) = timed(|| session.execute_script(&script));
                    last = Some(r?);
                    Ok::<_, DbError>(t)
                }) {
                    Ok(t) => {
                        push_row(&mut report, "overlap_geo", name, size, opts.reps, t);
                        let got = last.as_ref().map_or(0, |o| o.rows().len());
                        let want = geo_intersect_join(&da, &db).map(|v| v.len()).unwrap_or(usize::MAX);
                        report.check(
                            format!("overlap_geo {name} size={size}: count equals native geo"),
                            got == want,
                            format!("sql={got} native={want}"),
                        );
                    }
                    Err(e) => report
                        .context
                        .push(format!("error: overlap_geo {name} size={size}: {e}")),
                }
            }
            note_ordinal(&mut report, "overlap", "overlap_geo", "overlap_regmap", name, size);
        }
    }
    report
}

/// A store of `size` rows (one dataset, `"synthetic"`) of which exactly
/// `invalid` rows at seeded positions have a negative start or an end before
/// the start. Returns the store and the ids of the invalid rows, ascending.
pub fn build_search_store(
    size: u64,
    invalid: usize,
    opts: &BenchOptions,
) -> Result<(RegionStore, Vec<RegionId>), HarnessError> {
    if invalid as u64 > size {
        return Err(HarnessError::Config(format!(
            "{invalid} invalid rows in a store of {size}"
        )));
    }
    let seed = derive_seed(opts.seed, 0x5EA5C4 + size);
    let mut rows = to_raw(&generate_regions(&opts.gen(seed, size))?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let mut positions = sample(&mut rng, size as usize, invalid).into_vec();
    positions.sort_unstable();
    for (k, &pos) in positions.iter().enumerate() {
        let r = &mut rows[pos];
        if k % 2 == 0 {
            r.start = -r.start.max(1);
        } else {
            std::mem::swap(&mut r.start, &mut r.end);
        }
    }
    let mut store = RegionStore::new();
    store.import_dataset("synthetic", rows)?;
    let ids = positions.into_iter().map(|p| p as RegionId + 1).collect();
    Ok((store, ids))
}

pub fn run_search_bench(store_sizes: &[u64], invalid: usize, opts: &BenchOptions) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    report
        .context
        .push(format!("reference ({REFERENCE_SETUP}; ~24M regions): invalid search postgres ~5 s, mysql_innodb ~21 s, mysql_myisam 6 s; proximity 3-5 s, ~1 s indexed"));
    let query = ProximityParams::default();
    let mut sessions = opts.sessions(&mut report);

    for &size in store_sizes {
        let (mut store, seeded) = match build_search_store(size, invalid, opts) {
            Ok(v) => v,
            Err(e) => {
                report.context.push(format!("error: search size={size}: {e}"));
                continue;
            }
        };
        let mut found = Vec::new();
        let t = time_reps(opts.reps, opts.warmup, |_| {
            let (r, t) = timed(|| store.find_invalid());
            found = r;
            Ok::<_, HarnessError>(t)
        });
        if let Ok(t) = t {
            push_row(&mut report, "search_invalid", "native", size, opts.reps, t);
        }
        let found_ids: Vec<_> = found.iter().map(|r| r.id).collect();
        report.check(
            format!("search size={size}: invalid rows exact"),
            found_ids == seeded,
            format!("found={} seeded={}", found_ids.len(), seeded.len()),
        );

        store.drop_index();
        let mut scan = Vec::new();
        if let Ok(t) = time_reps(opts.reps, opts.warmup, |_| {
            let (r, t) = timed(|| store.proximity_search(&query.chrom, query.position, query.window));
            scan = r;
            Ok::<_, HarnessError>(t)
        }) {
            push_row(&mut report, "search_proximity", "native", size, opts.reps, t);
        }
        let (_, build) = timed(|| store.build_index());
        report
            .context
            .push(format!("index build native size={size}: {:.6} s", build.as_secs_f64()));
        let mut indexed = Vec::new();
        if let Ok(t) = time_reps(opts.reps, opts.warmup, |_| {
            let (r, t) = timed(|| store.proximity_search(&query.chrom, query.position, query.window));
            indexed = r;
            Ok::<_, HarnessError>(t)
        }) {
            push_row(&mut report, "search_proximity_indexed", "native", size, opts.reps, t);
        }
        report.check(
            format!("search size={size}: indexed == unindexed proximity"),
            scan == indexed,
            format!("unindexed={} indexed={}", scan.len(), indexed.len()),
        );
        note_ordinal(
            &mut report,
            "search",
            "search_proximity",
            "search_proximity_indexed",
            "native",
            size,
        );

        for session in &mut sessions {
            let name = session.dialect().tag();
            let dialect = session.dialect();
            let mut load = || -> Result<(), HarnessError> {
                session.reset_schema()?;
                // invalid rows cannot be GenomicRegions; insert raw tuples
                let mut values = Vec::new();
                for chunk in store.production().chunks(crate::sqlgen::BATCH_CHUNK) {
                    values.clear();
                    for row in chunk {
                        let r = &row.region;
                        values.push(format!("(1, '{}', {}, {})", r.chrom, r.start, r.end));
                    }
                    session.run(&format!(
                        "INSERT INTO regions (dataset_id, chrom, chromstart, chromend) VALUES {}",
                        values.join(", ")
                    ))?;
                }
                Ok(())
            };
            if let Err(e) = load() {
                report
                    .context
                    .push(format!("error: search load {name} size={size}: {e}"));
                continue;
            }
            let searches = [
                ("search_invalid", Ok(emit_invalid_search(dialect)), seeded.clone()),
                (
                    "search_proximity",
                    emit_proximity_search(dialect, &query),
                    indexed.iter().map(|r| r.id).collect(),
                ),
            ];
            for (scenario, script, want) in searches {
                let Ok(script) = script else { continue };
                let mut last = None;
                match time_reps(opts.reps, opts.warmup, |_| {
                    let (r, t) = timed(|| session.execute_script(&script));
                    last = Some(r?);
                    Ok::<_, DbError>(t)
                }) {
                    Ok(t) => {
                        push_row(&mut report, scenario, name, size, opts.reps, t);
                        let got: Vec<RegionId> = last
                            .as_ref()
                            .map(|o| o.rows().iter().filter_map(|r| parse_field(r, 0)).collect())
                            .unwrap_or_default();
                        report.check(
                            format!("{scenario} {name} size={size}: matches native"),
                            got == want,
                            format!("sql={} native={}", got.len(), want.len()),
                        );
                    }
                    Err(e) => report
                        .context
                        .push(format!("error: {scenario} {name} size={size}: {e}")),
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

pub const REPORT_TSV_HEADER: &str = "scenario\tbackend\tsize\treps\tmean_s\tmin_s\tmax_s";

/// TSV: `#`-prefixed context and check lines, then the header and one line
/// per row. JSON carries the same content.
pub fn write_report<W: Write>(report: &BenchmarkReport, format: ReportFormat, mut sink: W) -> io::Result<()> {
    match format {
        ReportFormat::Tsv => {
            for line in &report.context {
                writeln!(sink, "# {line}")?;
            }
            for c in &report.checks {
                let verdict = if c.passed { "pass" } else { "FAIL" };
                writeln!(sink, "# check\t{verdict}\t{}\t{}", c.name, c.detail)?;
            }
            writeln!(sink, "{REPORT_TSV_HEADER}")?;
            for r in &report.rows {
                writeln!(
                    sink,
                    "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                    r.scenario, r.backend, r.size, r.reps, r.mean_s, r.min_s, r.max_s
                )?;
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, report).map_err(io::Error::from)?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

pub fn read_report_json<R: Read>(source: R) -> Result<BenchmarkReport, HarnessError> {
    serde_json::from_reader(source).map_err(|e| HarnessError::Report(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_bounded() {
        let cfg = GenConfig {
            count: 2000,
            coord_lower: 1000,
            coord_upper: 3000,
            ..Default::default()
        };
        let a = generate_regions(&cfg).unwrap();
        assert_eq!(a, generate_regions(&cfg).unwrap());
        assert_eq!(a.len(), 2000);
        for r in &a {
            assert!((1..=500).contains(&r.len()));
            assert!(r.start() >= 1000 && r.end() <= 3000);
        }
        let other = generate_regions(&GenConfig { seed: 7, ..cfg.clone() }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn fixed_size_mode() {
        let cfg = GenConfig {
            count: 100,
            fixed_size: true,
            ..Default::default()
        };
        assert!(generate_regions(&cfg).unwrap().iter().all(|r| r.len() == 500));
    }

    #[test]
    fn generator_rejects_bad_config() {
        for cfg in [
            GenConfig {
                chromosomes: vec![],
                ..Default::default()
            },
            GenConfig {
                coord_lower: 0,
                coord_upper: 500,
                ..Default::default()
            },
            GenConfig {
                max_size: 0,
                ..Default::default()
            },
            GenConfig {
                coord_lower: -10,
                ..Default::default()
            },
        ] {
            assert!(generate_regions(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn uniform_length_mean() {
        let cfg = GenConfig {
            count: 100_000,
            ..Default::default()
        };
        let regions = generate_regions(&cfg).unwrap();
        let mean = regions.iter().map(|r| r.len() as f64).sum::<f64>() / regions.len() as f64;
        assert!((mean - 250.5).abs() <= 5.0, "{mean}");
    }

    #[test]
    fn insertion_report_shape() {
        let opts = BenchOptions {
            reps: 2,
            warmup: 0,
            backends: vec![BackendConfig::disabled(crate::sqlgen::SqlDialect::Postgres)],
            ..Default::default()
        };
        let report = run_insertion_bench(&[500], &opts);
        let scenarios: Vec<_> = report.rows.iter().map(|r| r.scenario.as_str()).collect();
        assert_eq!(scenarios, ["insertion_batch", "insertion_rowwise"]);
        assert!(report
            .rows
            .iter()
            .all(|r| r.min_s <= r.mean_s && r.mean_s <= r.max_s && r.reps == 2));
        assert!(report.all_checks_passed());
        assert!(report.context.iter().any(|c| c.starts_with("skipped: postgres")));
    }

    #[test]
    fn overlap_bench_cross_checks() {
        let opts = BenchOptions {
            reps: 1,
            warmup: 0,
            ..Default::default()
        };
        let report = run_overlap_bench(&[1000], &opts, &OverlapVariant::ALL);
        assert!(report.row("overlap_nested", "native", 1000).is_some());
        assert!(report.row("overlap_sweep", "native", 1000).is_some());
        assert!(report.row("overlap_geo", "native", 1000).is_some());
        assert_eq!(report.checks.len(), 2);
        assert!(report.all_checks_passed(), "{:?}", report.checks);
    }

    #[test]
    fn search_store_seeded_invalid_rows() {
        let opts = BenchOptions::default();
        let (store, ids) = build_search_store(5000, 24, &opts).unwrap();
        assert_eq!(ids.len(), 24);
        let found: Vec<_> = store.find_invalid().iter().map(|r| r.id).collect();
        assert_eq!(found, ids);
        assert!(build_search_store(5, 6, &opts).is_err());
    }

    #[test]
    fn report_serialization() {
        let mut report = BenchmarkReport::default();
        let mut tsv = Vec::new();
        write_report(&report, ReportFormat::Tsv, &mut tsv).unwrap();
        assert_eq!(String::from_utf8(tsv).unwrap(), format!("{REPORT_TSV_HEADER}\n"));

        report.context.push("hello".into());
        report.check("c", true, "d");
        report.rows.push(BenchRow {
            scenario: "s".into(),
            backend: "native".into(),
            size: 5,
            reps: 1,
            mean_s: 0.25,
            min_s: 0.125,
            max_s: 0.5,
        });
        let mut json = Vec::new();
        write_report(&report, ReportFormat::Json, &mut json).unwrap();
        assert_eq!(read_report_json(&json[..]).unwrap(), report);

        let mut tsv = Vec::new();
        write_report(&report, ReportFormat::Tsv, &mut tsv).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# hello");
        assert_eq!(lines[1], "# check\tpass\tc\td");
        assert_eq!(lines[2], REPORT_TSV_HEADER);
        assert_eq!(lines[3], "s\tnative\t5\t1\t0.250000\t0.125000\t0.500000");
    }

    #[test]
    fn dataset_names_are_unique() {
        let files = [
            PathBuf::from("a/x.bed"),
            PathBuf::from("b/x.bed"),
            PathBuf::from("y.bed"),
        ];
        assert_eq!(dataset_names(&files), ["x", "x_2", "y"]);
    }
}
