//! Overlap joins between two region sets and the pairwise mining report.
//!
//! [`nested_loop_join`] evaluates every same-chromosome pair exactly as the
//! SQL view does and is the reference semantics. [`sweep_join`] produces the
//! identical ordered output from per-chromosome sorted sweeps.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::bed::{parse_bed, BedError, CatalogEntry, ParseMode, ParseReport};
use crate::intervals::{metrics_coords, GenomicRegion, HalfBp, OverlapMetrics};
use crate::store::{RegionId, RegionStore, StoreError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JoinError {
    #[error("duplicate region id {id} in the {side} input")]
    DuplicateId { side: Side, id: RegionId },
    #[error("unbounded non-overlap join: min_bp < 1 needs a maximum centre distance")]
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Query,
    Reference,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Query => "query",
            Side::Reference => "reference",
        })
    }
}

/// A validated region tagged with its store id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdRegion {
    pub id: RegionId,
    pub region: GenomicRegion,
}

impl IdRegion {
    pub fn new(id: RegionId, region: GenomicRegion) -> Self {
        Self { id, region }
    }

    #[inline]
    fn coords(&self) -> (i64, i64) {
        (self.region.start(), self.region.end())
    }
}

/// Conditions a pair must meet to be reported. Both apply together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinFilter {
    /// Minimum bp overlap, inclusive.
    pub min_bp: i64,
    /// Maximum centre distance, exclusive.
    pub max_centre_distance: Option<HalfBp>,
}

impl Default for JoinFilter {
    fn default() -> Self {
        Self {
            min_bp: 1,
            max_centre_distance: None,
        }
    }
}

impl JoinFilter {
    pub fn new(min_bp: i64, max_centre_distance: Option<HalfBp>) -> Self {
        Self {
            min_bp,
            max_centre_distance,
        }
    }

    #[inline]
    pub fn accepts(&self, m: &OverlapMetrics) -> bool {
        m.bp_overlap >= self.min_bp && self.max_centre_distance.is_none_or(|bound| m.centre_distance < bound)
    }
}

/// One reported pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapPair {
    pub a_id: RegionId,
    pub b_id: RegionId,
    pub chrom: String,
    pub bp_overlap: i64,
    pub centre_distance: HalfBp,
}

fn check_unique(regions: &[IdRegion], side: Side) -> Result<(), JoinError> {
    let mut seen = HashSet::with_capacity(regions.len());
    for r in regions {
        if !seen.insert(r.id) {
            return Err(JoinError::DuplicateId { side, id: r.id });
        }
    }
    Ok(())
}

fn pair(a: &IdRegion, b: &IdRegion, m: OverlapMetrics) -> OverlapPair {
    OverlapPair {
        a_id: a.id,
        b_id: b.id,
        chrom: a.region.chrom().to_string(),
        bp_overlap: m.bp_overlap,
        centre_distance: m.centre_distance,
    }
}

/// Evaluates every pair of `a x b` on a shared chromosome and keeps those
/// the filter accepts. Output is ordered by `(a_id, b_id)`.
fn intern<'a>(ids: &mut HashMap<&'a str, u32>, r: &'a IdRegion) -> u32 {
    let next = ids.len() as u32;
    *ids.entry(r.region.chrom()).or_insert(next)
}

pub fn nested_loop_join(a: &[IdRegion], b: &[IdRegion], filter: &JoinFilter) -> Result<Vec<OverlapPair>, JoinError> {
    check_unique(a, Side::Query)?;
    check_unique(b, Side::Reference)?;

    let mut chrom_ids: HashMap<&str, u32> = HashMap::new();
    let mut a_keyed: Vec<(u32, &IdRegion)> = a.iter().map(|r| (intern(&mut chrom_ids, r), r)).collect();
    let mut b_keyed: Vec<(u32, &IdRegion)> = b.iter().map(|r| (intern(&mut chrom_ids, r), r)).collect();
    a_keyed.sort_unstable_by_key(|(_, r)| r.id);
    b_keyed.sort_unstable_by_key(|(_, r)| r.id);

    let mut out = Vec::new();
    for &(ca, ra) in &a_keyed {
        for &(cb, rb) in &b_keyed {
            if ca != cb {
                continue;
            }
            let m = metrics_coords(ra.coords(), rb.coords());
            if filter.accepts(&m) {
                out.push(pair(ra, rb, m));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct Item<'a> {
    start: i64,
    end: i64,
    region: &'a IdRegion,
}

/// Pairs sharing at least one base, found with one sweep over both sets in
/// start order. Each pair is emitted when its later-starting member arrives.
fn overlap_sweep<'a>(a: &[&'a IdRegion], b: &[&'a IdRegion], filter: &JoinFilter, out: &mut Vec<OverlapPair>) {
    let sorted = |v: &[&'a IdRegion]| {
        let mut items: Vec<Item<'a>> = v
            .iter()
            .map(|r| Item {
                start: r.region.start(),
                end: r.region.end(),
                region: r,
            })
            .collect();
        items.sort_unstable_by_key(|i| (i.start, i.end, i.region.id));
        items
    };
    let (a, b) = (sorted(a), sorted(b));
    let mut active_a: Vec<Item<'a>> = Vec::new();
    let mut active_b: Vec<Item<'a>> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].start <= b[j].start);
        if take_a {
            let x = a[i];
            i += 1;
            active_b.retain(|y| y.end > x.start);
            if x.end > x.start {
                for y in &active_b {
                    let m = metrics_coords((x.start, x.end), (y.start, y.end));
                    if filter.accepts(&m) {
                        out.push(pair(x.region, y.region, m));
                    }
                }
            }
            active_a.push(x);
        } else {
            let y = b[j];
            j += 1;
            active_a.retain(|x| x.end > y.start);
            if y.end > y.start {
                for x in &active_a {
                    let m = metrics_coords((x.start, x.end), (y.start, y.end));
                    if filter.accepts(&m) {
                        out.push(pair(x.region, y.region, m));
                    }
                }
            }
            active_b.push(y);
        }
    }
}

/// Pairs whose doubled centres lie within `bound` of each other, found by a
/// sliding window over both sets in centre order. Covers non-overlapping
/// pairs, which the start-ordered sweep cannot bound.
fn by_centre<'a>(v: &[&'a IdRegion]) -> Vec<(i64, &'a IdRegion)> {
    let mut c: Vec<(i64, &IdRegion)> = v.iter().map(|r| (r.region.doubled_centre(), *r)).collect();
    c.sort_unstable_by_key(|(c, r)| (*c, r.id));
    c
}

fn centre_band_sweep(a: &[&IdRegion], b: &[&IdRegion], bound: HalfBp, filter: &JoinFilter, out: &mut Vec<OverlapPair>) {
    let (a, b) = (by_centre(a), by_centre(b));
    let width = i64::try_from(bound.doubled()).unwrap_or(i64::MAX);
    let mut lo = 0;
    for &(ca, ra) in &a {
        let low = ca.saturating_sub(width);
        while lo < b.len() && b[lo].0 <= low {
            lo += 1;
        }
        let high = ca.saturating_add(width);
        for &(cb, rb) in &b[lo..] {
            if cb >= high {
                break;
            }
            let m = metrics_coords(ra.coords(), rb.coords());
            if filter.accepts(&m) {
                out.push(pair(ra, rb, m));
            }
        }
    }
}

fn group_by_chrom<'a>(a: &'a [IdRegion], b: &'a [IdRegion]) -> Vec<(Vec<&'a IdRegion>, Vec<&'a IdRegion>)> {
    let mut groups: HashMap<&str, (Vec<&IdRegion>, Vec<&IdRegion>)> = HashMap::new();
    for r in a {
        groups.entry(r.region.chrom()).or_default().0.push(r);
    }
    for r in b {
        if let Some(g) = groups.get_mut(r.region.chrom()) {
            g.1.push(r);
        }
    }
    groups
        .into_values()
        .filter(|(ga, gb)| !ga.is_empty() && !gb.is_empty())
        .collect()
}

/// Same output as [`nested_loop_join`], computed per chromosome with sorted
/// sweeps. Chromosomes are processed in parallel and merged in
/// `(a_id, b_id)` order.
///
/// A filter with `min_bp < 1` admits non-overlapping pairs and is only
/// accepted together with a centre-distance bound.
pub fn sweep_join(a: &[IdRegion], b: &[IdRegion], filter: &JoinFilter) -> Result<Vec<OverlapPair>, JoinError> {
    if filter.min_bp < 1 && filter.max_centre_distance.is_none() {
        return Err(JoinError::Unbounded);
    }
    check_unique(a, Side::Query)?;
    check_unique(b, Side::Reference)?;

    let groups = group_by_chrom(a, b);
    let mut out: Vec<OverlapPair> = groups
        .par_iter()
        .flat_map_iter(|(ga, gb)| {
            let mut local = Vec::new();
            match filter.max_centre_distance {
                Some(bound) if filter.min_bp < 1 => centre_band_sweep(ga, gb, bound, filter, &mut local),
                _ => overlap_sweep(ga, gb, filter, &mut local),
            }
            local
        })
        .collect();
    out.par_sort_unstable_by_key(|p| (p.a_id, p.b_id));
    Ok(out)
}

/// Id pairs whose closed segments `[start, end]` touch or cross, the boolean
/// answer of a spatial line-intersection join.
pub fn geo_intersect_join(a: &[IdRegion], b: &[IdRegion]) -> Result<Vec<(RegionId, RegionId)>, JoinError> {
    // Touching segments have doubled centres at most len(a) + len(b) apart.
    let longest = |v: &[IdRegion]| v.iter().map(|r| r.region.len()).max().unwrap_or(0) as u64;
    let bound = HalfBp::from_doubled(longest(a) + longest(b) + 1);
    let filter = JoinFilter::new(0, Some(bound));
    Ok(sweep_join(a, b, &filter)?
        .into_iter()
        .map(|p| (p.a_id, p.b_id))
        .collect())
}

/// Distinct query regions with at least one reported partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCount {
    pub overlapping: usize,
    pub total: usize,
}

impl OverlapCount {
    pub fn percentage(&self) -> Percentage {
        Percentage::of(self.overlapping as u64, self.total as u64)
    }
}

pub fn count_overlapping(a: &[IdRegion], b: &[IdRegion], filter: &JoinFilter) -> Result<OverlapCount, JoinError> {
    let pairs = match sweep_join(a, b, filter) {
        Err(JoinError::Unbounded) => nested_loop_join(a, b, filter)?,
        other => other?,
    };
    let mut overlapping = 0;
    let mut last = None;
    for p in &pairs {
        if last != Some(p.a_id) {
            overlapping += 1;
            last = Some(p.a_id);
        }
    }
    Ok(OverlapCount {
        overlapping,
        total: a.len(),
    })
}

/// A percentage held in hundredths, rounded half-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percentage {
    hundredths: u64,
}

impl Percentage {
    /// `part / whole * 100`, or zero for an empty whole.
    pub fn of(part: u64, whole: u64) -> Self {
        if whole == 0 {
            return Self { hundredths: 0 };
        }
        let (part, whole) = (part as u128, whole as u128);
        let hundredths = (2 * part * 10_000 + whole) / (2 * whole);
        Self {
            hundredths: hundredths as u64,
        }
    }

    pub fn hundredths(self) -> u64 {
        self.hundredths
    }

    /// Rounded half-up to a whole percent.
    pub fn whole_percent(self) -> u64 {
        (self.hundredths + 50) / 100
    }
}

impl fmt::Display for Percentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.hundredths / 100, self.hundredths % 100)
    }
}

/// One line of the pairwise co-location report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningRow {
    pub assembly: String,
    pub query: DatasetLabel,
    pub reference: DatasetLabel,
    pub query_total: usize,
    pub overlapping: usize,
    pub percentage: Percentage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetLabel {
    pub name: String,
    pub factor: String,
    pub cell_line: String,
    pub treatment: Option<String>,
}

impl From<&CatalogEntry> for DatasetLabel {
    fn from(e: &CatalogEntry) -> Self {
        Self {
            name: e.name.clone(),
            factor: e.factor.clone(),
            cell_line: e.cell_line.clone(),
            treatment: e.treatment.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("catalog dataset {0:?} has not been imported")]
    MissingDataset(String),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Bed { path: PathBuf, source: BedError },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Imports every catalog dataset, in catalog order, into a fresh store under
/// its catalog name. Relative paths resolve against `base`.
pub fn import_catalog(
    catalog: &[CatalogEntry],
    base: &Path,
    mode: ParseMode,
) -> Result<(RegionStore, Vec<ParseReport>), MiningError> {
    let mut store = RegionStore::new();
    let mut reports = Vec::with_capacity(catalog.len());
    for entry in catalog {
        let path = entry.resolved_path(base);
        let file = File::open(&path).map_err(|source| MiningError::Io {
            path: path.clone(),
            source,
        })?;
        let (regions, report) =
            parse_bed(BufReader::new(file), mode).map_err(|source| MiningError::Bed { path, source })?;
        store.import_dataset(&entry.name, regions)?;
        reports.push(report);
    }
    Ok((store, reports))
}

/// Counts, for every ordered pair of distinct datasets on the same assembly,
/// how many query regions overlap the reference. Assemblies appear in
/// catalog order; within one, rows are ordered by (query, reference) name.
pub fn pairwise_mining(
    catalog: &[CatalogEntry],
    store: &RegionStore,
    filter: &JoinFilter,
) -> Result<Vec<MiningRow>, MiningError> {
    let mut regions: HashMap<&str, Vec<IdRegion>> = HashMap::new();
    for entry in catalog {
        let valid = store
            .valid_regions(&entry.name)
            .ok_or_else(|| MiningError::MissingDataset(entry.name.clone()))?;
        regions.insert(&entry.name, valid);
    }

    let mut assemblies: Vec<&str> = Vec::new();
    for e in catalog {
        if !assemblies.contains(&e.assembly.as_str()) {
            assemblies.push(&e.assembly);
        }
    }

    let mut jobs: Vec<(&CatalogEntry, &CatalogEntry)> = Vec::new();
    for assembly in assemblies {
        let mut members: Vec<&CatalogEntry> = catalog.iter().filter(|e| e.assembly == assembly).collect();
        members.sort_by(|x, y| x.name.cmp(&y.name));
        for q in &members {
            for r in &members {
                if q.name != r.name {
                    jobs.push((q, r));
                }
            }
        }
    }

    jobs.par_iter()
        .map(|&(q, r)| {
            let count = count_overlapping(&regions[q.name.as_str()], &regions[r.name.as_str()], filter)?;
            Ok(MiningRow {
                assembly: q.assembly.clone(),
                query: q.into(),
                reference: r.into(),
                query_total: count.total,
                overlapping: count.overlapping,
                percentage: count.percentage(),
            })
        })
        .collect()
}

pub const PAIR_TSV_HEADER: &str = "a_id\tb_id\tchrom\tbp_overlap\tcentre_distance";

pub fn write_pairs_tsv<W: Write>(pairs: &[OverlapPair], mut sink: W) -> io::Result<()> {
    writeln!(sink, "{PAIR_TSV_HEADER}")?;
    for p in pairs {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}",
            p.a_id, p.b_id, p.chrom, p.bp_overlap, p.centre_distance
        )?;
    }
    sink.flush()
}

pub const MINING_TSV_HEADER: &str = "assembly\tquery_name\tquery_factor\tquery_cell_line\tquery_treatment\t\
reference_name\treference_factor\treference_cell_line\treference_treatment\tquery_total\toverlapping\tpercentage";

pub fn write_mining_tsv<W: Write>(rows: &[MiningRow], mut sink: W) -> io::Result<()> {
    writeln!(sink, "{MINING_TSV_HEADER}")?;
    let label = |d: &DatasetLabel| {
        format!(
            "{}\t{}\t{}\t{}",
            d.name,
            d.factor,
            d.cell_line,
            d.treatment.as_deref().unwrap_or("")
        )
    };
    for r in rows {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.assembly,
            label(&r.query),
            label(&r.reference),
            r.query_total,
            r.overlapping,
            r.percentage
        )?;
    }
    sink.flush()
}
