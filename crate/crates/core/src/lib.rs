//! Genomic region overlap mining: interval metrics, BED import, an
//! in-memory region store, overlap joins, SQL script generation for
//! PostgreSQL and MySQL, and a benchmark harness.

pub mod bed;
pub mod db;
pub mod harness;
pub mod intervals;
pub mod overlap;
pub mod sqlgen;
pub mod store;

pub use bed::{load_catalog, parse_bed, write_bed, CatalogEntry, ParseMode, ParseReport};
pub use intervals::{
    bp_overlap, centre_distance, centre_distance_sql_compat, classify, geo_intersects, metrics, overlaps, overlaps_by,
    GenomicRegion, HalfBp, OverlapMetrics, RawRegion, RegionError, RelativePosition,
};
pub use overlap::{
    count_overlapping, geo_intersect_join, import_catalog, nested_loop_join, pairwise_mining, sweep_join, IdRegion,
    JoinError, JoinFilter, MiningRow, OverlapCount, OverlapPair, Percentage,
};
pub use sqlgen::{ScriptKind, SqlDialect, SqlScript};
pub use store::{RegionId, RegionStore, SharedStore, StoredRegion};
