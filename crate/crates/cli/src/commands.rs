use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};

use regmap_core::bed::{load_catalog, write_bed};
use regmap_core::harness::{
    dataset_names, generate_regions, run_import_bench, run_insertion_bench, run_overlap_bench, run_search_bench,
    write_report, BenchOptions, GenConfig, OverlapVariant, ReportFormat, DEFAULT_SIZES,
};
use regmap_core::overlap::{write_mining_tsv, write_pairs_tsv};
use regmap_core::sqlgen::{emit, ProximityParams, RandomGenParams, ScriptKind, ScriptParams, SqlDialect};
use regmap_core::{
    import_catalog, nested_loop_join, pairwise_mining, parse_bed, sweep_join, GenomicRegion, HalfBp, JoinFilter,
    ParseMode, ParseReport, RawRegion, RegionStore, StoredRegion,
};

use crate::config::Config;
use crate::{BenchArgs, GenArgs, ImportArgs, MineArgs, OverlapArgs, SearchArgs, SqlgenArgs, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

/// `all` or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice<T> {
    All,
    One(T),
}

impl<T: FromStr<Err = String>> FromStr for Choice<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            Ok(Choice::All)
        } else {
            s.parse().map(Choice::One)
        }
    }
}

impl<T: Copy> Choice<T> {
    fn expand(self, all: &[T]) -> Vec<T> {
        match self {
            Choice::All => all.to_vec(),
            Choice::One(t) => vec![t],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Nested,
    Sweep,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nested" => Ok(Algorithm::Nested),
            "sweep" => Ok(Algorithm::Sweep),
            _ => Err(format!("unknown algorithm {s:?} (nested or sweep)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Insertion,
    Import,
    Overlap,
    Search,
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "insertion" => Ok(Scenario::Insertion),
            "import" => Ok(Scenario::Import),
            "overlap" => Ok(Scenario::Overlap),
            "search" => Ok(Scenario::Search),
            _ => Err(format!("unknown scenario {s:?} (insertion, import, overlap or search)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariantArg(OverlapVariant);

impl FromStr for VariantArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(VariantArg(match s {
            "nested" => OverlapVariant::Nested,
            "sweep" => OverlapVariant::Sweep,
            "geo" => OverlapVariant::GeoNative,
            "regmap_sql" => OverlapVariant::RegmapSql,
            "geo_sql" => OverlapVariant::GeoSql,
            _ => return Err(format!("unknown overlap variant {s:?}")),
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportFormatArg(ReportFormat);

impl FromStr for ReportFormatArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tsv" => Ok(ReportFormatArg(ReportFormat::Tsv)),
            "json" => Ok(ReportFormatArg(ReportFormat::Json)),
            _ => Err(format!("unknown report format {s:?} (tsv or json)")),
        }
    }
}

/// `CHROM:POS`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Locus {
    pub chrom: String,
    pub position: i64,
}

impl FromStr for Locus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (chrom, pos) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected CHROM:POS, got {s:?}"))?;
        if chrom.is_empty() {
            return Err(format!("empty chromosome in {s:?}"));
        }
        let position = pos
            .replace(',', "")
            .parse()
            .map_err(|_| format!("bad position in {s:?}"))?;
        Ok(Locus {
            chrom: chrom.to_string(),
            position,
        })
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_bed(path: &Path, mode: ParseMode) -> Result<(Vec<RawRegion>, ParseReport)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (regions, report) = parse_bed(BufReader::new(file), mode).with_context(|| path.display().to_string())?;
    for reject in &report.rejects {
        warn!("{}:{}: skipped ({})", path.display(), reject.line, reject.reason);
    }
    Ok((regions, report))
}

fn parse_mode(strict: bool) -> ParseMode {
    if strict {
        ParseMode::Strict
    } else {
        ParseMode::Permissive
    }
}

fn filter_from(cfg: &Config, min_bp: Option<i64>, bound: Option<HalfBp>) -> Result<JoinFilter> {
    let min_bp = cfg.resolve(min_bp, "min-bp", 1)?;
    let bound = cfg.resolve_opt(bound, "max-centre-distance")?;
    Ok(JoinFilter::new(min_bp, bound))
}

pub fn gen(cfg: &Config, args: GenArgs) -> Result<()> {
    let defaults = GenConfig::default();
    let chromosomes = cfg.list(args.chromosomes, "chromosomes")?;
    let config = GenConfig {
        seed: cfg.resolve(args.seed, "seed", defaults.seed)?,
        count: cfg.resolve(args.count, "count", defaults.count)?,
        chromosomes: if chromosomes.is_empty() {
            defaults.chromosomes
        } else {
            chromosomes
        },
        coord_lower: cfg.resolve(args.coord_lower, "coord-lower", defaults.coord_lower)?,
        coord_upper: cfg.resolve(args.coord_upper, "coord-upper", defaults.coord_upper)?,
        max_size: cfg.resolve(args.max_size, "max-size", defaults.max_size)?,
        fixed_size: cfg.switch(args.fixed_size, "fixed-size")?,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let regions = generate_regions(&config)?;
    write_bed(&regions, output(args.out.as_deref())?)?;
    Ok(())
}

pub fn import(cfg: &Config, args: ImportArgs) -> Result<()> {
    let files: Vec<PathBuf> = cfg.list(args.files, "files")?;
    if files.is_empty() {
        return Err(usage("no input files"));
    }
    let mode = parse_mode(cfg.switch(args.strict, "strict")?);
    let mut store = RegionStore::new();
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "dataset\tpath\trows\trejected\tfirst_id\tlast_id")?;
    for (path, name) in files.iter().zip(dataset_names(&files)) {
        let (regions, report) = read_bed(path, mode)?;
        let first = store.len() as u64 + 1;
        let n = store.import_dataset(&name, regions)?;
        let ids = if n == 0 {
            "\t".to_string()
        } else {
            format!("{first}\t{}", first + n as u64 - 1)
        };
        writeln!(out, "{name}\t{}\t{n}\t{}\t{ids}", path.display(), report.rejected)?;
    }
    info!("{} rows imported, staging holds {}", store.len(), store.staging_len());
    out.flush()?;
    Ok(())
}

pub fn overlap(cfg: &Config, args: OverlapArgs) -> Result<()> {
    let filter = filter_from(cfg, args.min_bp, args.max_centre_distance)?;
    if filter.min_bp < 1 && filter.max_centre_distance.is_none() {
        return Err(usage("--min-bp below 1 needs --max-centre-distance"));
    }
    let algorithm = cfg.resolve(args.algorithm, "algorithm", Algorithm::Sweep)?;
    let mode = parse_mode(cfg.switch(args.strict, "strict")?);

    // ids as a fresh store would assign them: A first, then B
    let mut store = RegionStore::new();
    store.import_dataset("a", read_bed(&args.a, mode)?.0)?;
    store.import_dataset("b", read_bed(&args.b, mode)?.0)?;
    let a = store.valid_regions("a").unwrap_or_default();
    let b = store.valid_regions("b").unwrap_or_default();
    let pairs = match algorithm {
        Algorithm::Nested => nested_loop_join(&a, &b, &filter)?,
        Algorithm::Sweep => sweep_join(&a, &b, &filter)?,
    };
    write_pairs_tsv(&pairs, output(args.out.as_deref())?)?;
    Ok(())
}

fn write_regions(rows: &[StoredRegion], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "id\tdataset\tchrom\tstart\tend")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.id, r.dataset, r.region.chrom, r.region.start, r.region.end
        )?;
    }
    out.flush()
}

pub fn search(cfg: &Config, args: SearchArgs) -> Result<()> {
    let near = if args.invalid {
        None
    } else {
        cfg.resolve_opt(args.near, "near")?
    };
    if !args.invalid && near.is_none() {
        return Err(usage("one of --invalid or --near is required"));
    }
    let mode = parse_mode(cfg.switch(args.strict, "strict")?);
    let mut store = RegionStore::new();
    for (path, name) in args.store_from.iter().zip(dataset_names(&args.store_from)) {
        store.import_dataset(&name, read_bed(path, mode)?.0)?;
    }
    let rows = match near {
        None => store.find_invalid(),
        Some(locus) => {
            let window = cfg.resolve(args.window, "window", ProximityParams::default().window)?;
            if !cfg.switch(args.no_index, "no-index")? {
                store.build_index();
            }
            store.proximity_search(&locus.chrom, locus.position, window)
        }
    };
    write_regions(&rows, output(args.out.as_deref())?)?;
    Ok(())
}

pub fn mine(cfg: &Config, args: MineArgs) -> Result<()> {
    let filter = filter_from(cfg, args.min_bp, args.max_centre_distance)?;
    if filter.min_bp < 1 && filter.max_centre_distance.is_none() {
        return Err(usage("--min-bp below 1 needs --max-centre-distance"));
    }
    let mode = parse_mode(cfg.switch(args.strict, "strict")?);
    let file = File::open(&args.catalog).with_context(|| format!("opening {}", args.catalog.display()))?;
    let catalog = load_catalog(BufReader::new(file)).with_context(|| args.catalog.display().to_string())?;
    let base = args.catalog.parent().unwrap_or(Path::new("."));
    let (store, reports) = import_catalog(&catalog, base, mode)?;
    for (entry, report) in catalog.iter().zip(&reports) {
        if report.rejected > 0 {
            warn!("{}: {} malformed lines skipped", entry.name, report.rejected);
        }
    }
    let rows = pairwise_mining(&catalog, &store, &filter)?;
    write_mining_tsv(&rows, output(args.out.as_deref())?)?;
    Ok(())
}

pub fn sqlgen(cfg: &Config, args: SqlgenArgs) -> Result<()> {
    let dialects = cfg
        .resolve(args.dialect, "dialect", Choice::All)?
        .expand(&SqlDialect::ALL);
    let kinds = cfg.resolve(args.kind, "kind", Choice::All)?.expand(&ScriptKind::ALL);
    let proximity = cfg.resolve_opt(args.near, "near")?;
    let defaults = ScriptParams::default();
    let random_defaults = RandomGenParams::default();
    let regions_path: Option<PathBuf> = cfg.resolve_opt(args.regions, "regions")?;
    let insert_regions = match regions_path {
        None => Vec::new(),
        Some(path) => read_bed(&path, ParseMode::Strict)?
            .0
            .into_iter()
            .map(GenomicRegion::try_from)
            .collect::<Result<_, _>>()
            .with_context(|| path.display().to_string())?,
    };
    let mut proximity_params = ProximityParams {
        window: cfg.resolve(args.window, "window", defaults.proximity.window)?,
        ..defaults.proximity.clone()
    };
    if let Some(locus) = proximity {
        proximity_params.chrom = locus.chrom;
        proximity_params.position = locus.position;
    }
    let params = ScriptParams {
        filter: filter_from(cfg, args.min_bp, args.max_centre_distance)?,
        import_path: cfg.resolve(args.import_path, "import-path", defaults.import_path.clone())?,
        random: RandomGenParams {
            count: cfg.resolve(args.count, "count", random_defaults.count)?,
            max_size: cfg.resolve(args.max_size, "max-size", random_defaults.max_size)?,
            fixed_size: cfg.switch(args.fixed_size, "fixed-size")?,
            ..random_defaults
        },
        insert_regions,
        proximity: proximity_params,
        ..defaults
    };

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for kind in kinds {
        for &dialect in &dialects {
            let script = emit(kind, dialect, &params).map_err(|e| usage(e.to_string()))?;
            let path = args.out_dir.join(script.file_name());
            fs::write(&path, script.text()).with_context(|| format!("writing {}", path.display()))?;
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn bench(cfg: &Config, args: BenchArgs) -> Result<()> {
    let scenario: Scenario = cfg
        .resolve_opt(args.scenario, "scenario")?
        .ok_or_else(|| usage("--scenario is required"))?;
    let defaults = BenchOptions::default();
    let opts = BenchOptions {
        reps: cfg.resolve(args.reps, "reps", defaults.reps)?,
        warmup: cfg.resolve(args.warmup, "warmup", defaults.warmup)?,
        seed: cfg.resolve(args.seed, "seed", defaults.seed)?,
        max_size: cfg.resolve(args.max_size, "max-size", defaults.max_size)?,
        fixed_size: cfg.switch(args.fixed_size, "fixed-size")?,
        backends: cfg.backends(),
    };
    if opts.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let sizes = cfg.list(args.sizes, "sizes")?;
    let format = cfg
        .resolve(args.format, "format", ReportFormatArg(ReportFormat::Tsv))?
        .0;

    let report = match scenario {
        Scenario::Insertion => run_insertion_bench(or_default(&sizes, &DEFAULT_SIZES), &opts),
        Scenario::Overlap => {
            let variants: Vec<OverlapVariant> = cfg.list(args.variants, "variants")?.into_iter().map(|v| v.0).collect();
            let variants = if variants.is_empty() {
                OverlapVariant::ALL.to_vec()
            } else {
                variants
            };
            run_overlap_bench(or_default(&sizes, &DEFAULT_SIZES), &opts, &variants)
        }
        Scenario::Search => {
            let invalid = cfg.resolve(args.invalid, "invalid", 24)?;
            run_search_bench(or_default(&sizes, &[1_000_000]), invalid, &opts)
        }
        Scenario::Import => {
            let files: Vec<PathBuf> = cfg.list(args.files, "files")?;
            if files.is_empty() {
                return Err(usage("the import scenario needs --files"));
            }
            run_import_bench(&files, &opts)
        }
    };
    write_report(&report, format, output(args.report.as_deref())?)?;
    if !report.all_checks_passed() {
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        bail!("correctness checks failed: {}", failed.join("; "));
    }
    Ok(())
}

fn or_default<'a>(given: &'a [u64], default: &'a [u64]) -> &'a [u64] {
    if given.is_empty() {
        default
    } else {
        given
    }
}
