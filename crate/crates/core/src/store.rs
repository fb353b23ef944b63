//! In-memory region store.
//!
//! Mirrors the database layout the benchmarks run against: a production
//! table of regions with sequential primary keys, a staging buffer used by
//! bulk import, and an optional per-(dataset, chromosome) sorted index used
//! by proximity search.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::error::Error as StdError;
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};

use thiserror::Error;

use crate::intervals::{GenomicRegion, RawRegion};
use crate::overlap::IdRegion;

pub type RegionId = u64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("dataset {0:?} is already imported")]
    DuplicateDataset(String),
    #[error("could not reserve room for {0} rows")]
    Capacity(usize),
    #[error("row source failed after {persisted} rows were persisted: {source}")]
    Source {
        persisted: usize,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
}

/// One row of the production table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredRegion {
    pub id: RegionId,
    pub dataset: Arc<str>,
    pub region: RawRegion,
}

impl StoredRegion {
    pub fn is_valid(&self) -> bool {
        self.region.is_valid()
    }
}

#[derive(Debug, Clone)]
struct DatasetSpan {
    name: Arc<str>,
    first: usize,
    len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct IndexEntry {
    start: i64,
    end: i64,
    pos: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ChromIndex {
    entries: Vec<IndexEntry>,
    max_len: i64,
}

impl ChromIndex {
    /// Positions of entries sharing at least one base with `[lo, hi)`.
    fn query(&self, lo: i64, hi: i64, out: &mut Vec<usize>) {
        // end <= start + max_len, so an entry can only reach past `lo` if it
        // starts after `lo - max_len`.
        let first_start = lo.saturating_sub(self.max_len).saturating_add(1);
        let from = self.entries.partition_point(|e| e.start < first_start);
        for e in &self.entries[from..] {
            if e.start >= hi {
                break;
            }
            if e.end > lo && e.end > e.start {
                out.push(e.pos);
            }
        }
    }
}

/// chromosome -> dataset index -> sorted entries
type RegionIndex = HashMap<String, BTreeMap<usize, ChromIndex>>;

#[cfg(test)]
type IndexRow = (String, usize, Vec<(i64, i64, usize)>);

#[derive(Debug, Default)]
pub struct RegionStore {
    production: Vec<StoredRegion>,
    staging: Vec<RawRegion>,
    datasets: Vec<DatasetSpan>,
    by_name: HashMap<Arc<str>, usize>,
    next_id: RegionId,
    index: Option<RegionIndex>,
}

fn half_open_window(position: i64, window: u64) -> (i64, i64) {
    let w = i64::try_from(window).unwrap_or(i64::MAX);
    (position.saturating_sub(w), position.saturating_add(w))
}

fn shares_base(r: &RawRegion, lo: i64, hi: i64) -> bool {
    r.is_valid() && r.end > r.start && r.start < hi && r.end > lo
}

impl RegionStore {
    pub fn new() -> Self {
        Self {
            next_id: 1,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.production.len()
    }

    pub fn is_empty(&self) -> bool {
        self.production.is_empty()
    }

    pub fn staging_len(&self) -> usize {
        self.staging.len()
    }

    pub fn production(&self) -> &[StoredRegion] {
        &self.production
    }

    pub fn dataset_names(&self) -> impl Iterator<Item = &str> {
        self.datasets.iter().map(|d| &*d.name)
    }

    pub fn contains_dataset(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    /// All rows of one dataset, in id order.
    pub fn dataset(&self, name: &str) -> Option<&[StoredRegion]> {
        let span = &self.datasets[*self.by_name.get(name)?];
        Some(&self.production[span.first..span.first + span.len])
    }

    /// The valid rows of one dataset, ready for an overlap join.
    pub fn valid_regions(&self, name: &str) -> Option<Vec<IdRegion>> {
        let rows = self.dataset(name)?;
        Some(
            rows.iter()
                .filter_map(|row| {
                    let region = row.region.validate().ok()?;
                    Some(IdRegion::new(row.id, region))
                })
                .collect(),
        )
    }

    fn register_dataset(&mut self, name: &str) -> Result<usize, StoreError> {
        if self.by_name.contains_key(name) {
            return Err(StoreError::DuplicateDataset(name.to_string()));
        }
        let name: Arc<str> = Arc::from(name);
        let idx = self.datasets.len();
        self.datasets.push(DatasetSpan {
            name: name.clone(),
            first: self.production.len(),
            len: 0,
        });
        self.by_name.insert(name, idx);
        Ok(idx)
    }

    /// Moves `rows` into production under `dataset`, assigning ids. Room must
    /// already be reserved.
    fn append<I: IntoIterator<Item = RawRegion>>(&mut self, dataset: usize, rows: I) -> usize {
        let from = self.production.len();
        let name = self.datasets[dataset].name.clone();
        for region in rows {
            let id = self.next_id;
            self.next_id += 1;
            self.production.push(StoredRegion {
                id,
                dataset: name.clone(),
                region,
            });
        }
        let added = self.production.len() - from;
        self.datasets[dataset].len += added;
        self.index_range(dataset, from);
        added
    }

    fn index_range(&mut self, dataset: usize, from: usize) {
        let Some(index) = self.index.as_mut() else {
            return;
        };
        let mut touched = BTreeSet::new();
        for (pos, row) in self.production.iter().enumerate().skip(from) {
            if !row.region.is_valid() {
                continue;
            }
            let r = &row.region;
            let chrom = index.entry(r.chrom.clone()).or_default();
            let ci = chrom.entry(dataset).or_default();
            ci.entries.push(IndexEntry {
                start: r.start,
                end: r.end,
                pos,
            });
            ci.max_len = ci.max_len.max(r.end - r.start);
            touched.insert(r.chrom.clone());
        }
        for chrom in touched {
            if let Some(ci) = index.get_mut(&chrom).and_then(|m| m.get_mut(&dataset)) {
                // new entries were pushed at the tail; a stable sort merges the run
                ci.entries.sort();
            }
        }
    }

    /// Three-step staging import: load into staging, copy into production
    /// with fresh ids, empty staging. Either every row is imported or the
    /// store is left unchanged.
    pub fn import_dataset(&mut self, name: &str, regions: Vec<RawRegion>) -> Result<usize, StoreError> {
        if self.by_name.contains_key(name) {
            return Err(StoreError::DuplicateDataset(name.to_string()));
        }
        let n = regions.len();
        // i) staging load
        if self.staging.try_reserve(n).is_err() {
            self.staging.clear();
            return Err(StoreError::Capacity(n));
        }
        self.staging.extend(regions);
        // ii) copy across with id assignment
        if self.production.try_reserve(n).is_err() {
            self.staging.clear();
            return Err(StoreError::Capacity(n));
        }
        let dataset = self.register_dataset(name)?;
        let rows = std::mem::take(&mut self.staging);
        let added = self.append(dataset, rows.iter().cloned());
        // iii) empty staging, keeping its allocation for the next import
        self.staging = rows;
        self.staging.clear();
        Ok(added)
    }

    /// Inserts every row in one atomic append.
    pub fn insert_regions_batch<I>(&mut self, name: &str, regions: I) -> Result<usize, StoreError>
    where
        I: IntoIterator<Item = RawRegion>,
    {
        self.try_insert_regions_batch(name, regions.into_iter().map(Ok::<_, std::convert::Infallible>))
    }

    /// Inserts rows one at a time, each as its own append.
    pub fn insert_regions_rowwise<I>(&mut self, name: &str, regions: I) -> Result<usize, StoreError>
    where
        I: IntoIterator<Item = RawRegion>,
    {
        self.try_insert_regions_rowwise(name, regions.into_iter().map(Ok::<_, std::convert::Infallible>))
    }

    /// Batch insert from a fallible row source. A source error aborts the
    /// whole batch with nothing persisted.
    pub fn try_insert_regions_batch<I, E>(&mut self, name: &str, regions: I) -> Result<usize, StoreError>
    where
        I: IntoIterator<Item = Result<RawRegion, E>>,
        E: StdError + Send + Sync + 'static,
    {
        if self.by_name.contains_key(name) {
            return Err(StoreError::DuplicateDataset(name.to_string()));
        }
        let rows = regions
            .into_iter()
            .collect::<Result<Vec<_>, E>>()
            .map_err(|e| StoreError::Source {
                persisted: 0,
                source: Box::new(e),
            })?;
        if self.production.try_reserve(rows.len()).is_err() {
            return Err(StoreError::Capacity(rows.len()));
        }
        let dataset = self.register_dataset(name)?;
        Ok(self.append(dataset, rows))
    }

    /// Row-wise insert from a fallible row source. Rows before a failing one
    /// stay persisted.
    pub fn try_insert_regions_rowwise<I, E>(&mut self, name: &str, regions: I) -> Result<usize, StoreError>
    where
        I: IntoIterator<Item = Result<RawRegion, E>>,
        E: StdError + Send + Sync + 'static,
    {
        let dataset = self.register_dataset(name)?;
        let mut persisted = 0;
        for row in regions {
            let row = row.map_err(|e| StoreError::Source {
                persisted,
                source: Box::new(e),
            })?;
            self.append_row(dataset, row)?;
            persisted += 1;
        }
        Ok(persisted)
    }

    fn append_row(&mut self, dataset: usize, row: RawRegion) -> Result<RegionId, StoreError> {
        if self.production.try_reserve(1).is_err() {
            return Err(StoreError::Capacity(1));
        }
        let id = self.next_id;
        self.append(dataset, std::iter::once(row));
        Ok(id)
    }

    /// Rows with a negative start or an end before the start, in id order.
    /// Always a full scan.
    pub fn find_invalid(&self) -> Vec<StoredRegion> {
        self.production
            .iter()
            .filter(|row| row.region.start < 0 || row.region.end < row.region.start)
            .cloned()
            .collect()
    }

    /// Valid regions on `chrom` sharing at least one base with
    /// `[position - window, position + window)`, in id order. Uses the
    /// index when one is built.
    pub fn proximity_search(&self, chrom: &str, position: i64, window: u64) -> Vec<StoredRegion> {
        let Some(index) = &self.index else {
            return self.proximity_search_scan(chrom, position, window);
        };
        let (lo, hi) = half_open_window(position, window);
        let mut hits = Vec::new();
        if let Some(per_dataset) = index.get(chrom) {
            for ci in per_dataset.values() {
                ci.query(lo, hi, &mut hits);
            }
        }
        hits.sort_unstable();
        hits.into_iter().map(|pos| self.production[pos].clone()).collect()
    }

    /// [`proximity_search`](Self::proximity_search) by linear scan, ignoring any index.
    pub fn proximity_search_scan(&self, chrom: &str, position: i64, window: u64) -> Vec<StoredRegion> {
        let (lo, hi) = half_open_window(position, window);
        self.production
            .iter()
            .filter(|row| row.region.chrom == chrom && shares_base(&row.region, lo, hi))
            .cloned()
            .collect()
    }

    pub fn is_indexed(&self) -> bool {
        self.index.is_some()
    }

    /// Builds the sorted index from scratch. Calling it again rebuilds the
    /// same state.
    pub fn build_index(&mut self) {
        self.index = Some(RegionIndex::new());
        for dataset in 0..self.datasets.len() {
            let span = &self.datasets[dataset];
            let (first, len) = (span.first, span.len);
            // index_range walks to the end of production, so restrict per span
            let index = self.index.as_mut().unwrap();
            for (offset, row) in self.production[first..first + len].iter().enumerate() {
                let r = &row.region;
                if !r.is_valid() {
                    continue;
                }
                let ci = index.entry(r.chrom.clone()).or_default().entry(dataset).or_default();
                ci.entries.push(IndexEntry {
                    start: r.start,
                    end: r.end,
                    pos: first + offset,
                });
                ci.max_len = ci.max_len.max(r.end - r.start);
            }
        }
        for per_dataset in self.index.as_mut().unwrap().values_mut() {
            for ci in per_dataset.values_mut() {
                ci.entries.sort_unstable();
            }
        }
    }

    pub fn drop_index(&mut self) {
        self.index = None;
    }

    /// Valid rows grouped by chromosome as the index would hold them,
    /// for consistency checks.
    #[cfg(test)]
    fn index_snapshot(&self) -> Option<Vec<IndexRow>> {
        let index = self.index.as_ref()?;
        let mut out: Vec<_> = index
            .iter()
            .flat_map(|(chrom, m)| {
                m.iter().map(move |(ds, ci)| {
                    (
                        chrom.clone(),
                        *ds,
                        ci.entries.iter().map(|e| (e.start, e.end, e.pos)).collect(),
                    )
                })
            })
            .collect();
        out.sort();
        Some(out)
    }
}

/// A region store shared between threads: many readers or one writer.
/// Imports are serialized by a separate lock so dataset rows stay contiguous.
#[derive(Debug, Clone, Default)]
pub struct SharedStore {
    inner: Arc<RwLock<RegionStore>>,
    import_lock: Arc<Mutex<()>>,
}

impl SharedStore {
    pub fn new() -> Self {
        Self::from_store(RegionStore::new())
    }

    pub fn from_store(store: RegionStore) -> Self {
        Self {
            inner: Arc::new(RwLock::new(store)),
            import_lock: Arc::new(Mutex::new(())),
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, RegionStore> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, RegionStore> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn import_dataset(&self, name: &str, regions: Vec<RawRegion>) -> Result<usize, StoreError> {
        let _serial = self.import_lock.lock().unwrap_or_else(|e| e.into_inner());
        self.write().import_dataset(name, regions)
    }

    /// One write-lock acquisition for the whole batch.
    pub fn insert_regions_batch<I>(&self, name: &str, regions: I) -> Result<usize, StoreError>
    where
        I: IntoIterator<Item = RawRegion>,
    {
        let _serial = self.import_lock.lock().unwrap_or_else(|e| e.into_inner());
        let rows: Vec<_> = regions.into_iter().collect();
        self.write().insert_regions_batch(name, rows)
    }

    /// One write-lock acquisition per row; readers may run between rows.
    pub fn insert_regions_rowwise<I>(&self, name: &str, regions: I) -> Result<usize, StoreError>
    where
        I: IntoIterator<Item = RawRegion>,
    {
        let _serial = self.import_lock.lock().unwrap_or_else(|e| e.into_inner());
        let dataset = self.write().register_dataset(name)?;
        let mut n = 0;
        for row in regions {
            self.write().append_row(dataset, row)?;
            n += 1;
        }
        Ok(n)
    }

    pub fn into_inner(self) -> Option<RegionStore> {
        Arc::try_unwrap(self.inner)
            .ok()
            .map(|lock| lock.into_inner().unwrap_or_else(|e| e.into_inner()))
    }
}

/// Convenience for tests and benchmarks: converts valid regions to raw rows.
pub fn to_raw(regions: &[GenomicRegion]) -> Vec<RawRegion> {
    regions.iter().map(RawRegion::from).collect()
}
