//! SQL script emission for PostgreSQL and MySQL (InnoDB / MyISAM).
//!
//! Every script is a deterministic function of its kind, dialect and
//! parameters. Only validated integers and identifier-like tokens are
//! substituted into the text.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::harness::DEFAULT_CHROMOSOMES;
use crate::intervals::GenomicRegion;
use crate::overlap::JoinFilter;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SqlGenError {
    #[error("{0:?} is not a safe SQL token (allowed: letters, digits, '_', '.', '-')")]
    UnsafeToken(String),
    #[error("{0:?} is not a safe file path for a bulk load")]
    UnsafePath(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SqlDialect {
    Postgres,
    MysqlInnodb,
    MysqlMyisam,
}

impl SqlDialect {
    pub const ALL: [SqlDialect; 3] = [SqlDialect::Postgres, SqlDialect::MysqlInnodb, SqlDialect::MysqlMyisam];

    pub fn tag(self) -> &'static str {
        match self {
            SqlDialect::Postgres => "postgres",
            SqlDialect::MysqlInnodb => "mysql_innodb",
            SqlDialect::MysqlMyisam => "mysql_myisam",
        }
    }

    pub fn is_mysql(self) -> bool {
        !matches!(self, SqlDialect::Postgres)
    }

    /// MySQL storage engine named in table DDL.
    pub fn engine(self) -> Option<&'static str> {
        match self {
            SqlDialect::Postgres => None,
            SqlDialect::MysqlInnodb => Some("InnoDB"),
            SqlDialect::MysqlMyisam => Some("MyISAM"),
        }
    }

    fn begin(self) -> &'static str {
        if self.is_mysql() {
            "START TRANSACTION"
        } else {
            "BEGIN"
        }
    }

    /// Integer division of an integer expression by two.
    fn halve(self, expr: &str) -> String {
        if self.is_mysql() {
            format!("({expr}) DIV 2")
        } else {
            format!("({expr}) / 2")
        }
    }
}

impl fmt::Display for SqlDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SqlDialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SqlDialect::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| format!("unknown dialect {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScriptKind {
    Ddl,
    RegmapQuery,
    GeoQuery,
    BulkImport,
    RandomGen,
    RowwiseInsert,
    BatchInsert,
    InvalidSearch,
    ProximitySearch,
}

impl ScriptKind {
    pub const ALL: [ScriptKind; 9] = [
        ScriptKind::Ddl,
        ScriptKind::RegmapQuery,
        ScriptKind::GeoQuery,
        ScriptKind::BulkImport,
        ScriptKind::RandomGen,
        ScriptKind::RowwiseInsert,
        ScriptKind::BatchInsert,
        ScriptKind::InvalidSearch,
        ScriptKind::ProximitySearch,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ScriptKind::Ddl => "ddl",
            ScriptKind::RegmapQuery => "regmap_query",
            ScriptKind::GeoQuery => "geo_query",
            ScriptKind::BulkImport => "bulk_import",
            ScriptKind::RandomGen => "random_gen",
            ScriptKind::RowwiseInsert => "rowwise_insert",
            ScriptKind::BatchInsert => "batch_insert",
            ScriptKind::InvalidSearch => "invalid_search",
            ScriptKind::ProximitySearch => "proximity_search",
        }
    }
}

impl fmt::Display for ScriptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ScriptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScriptKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| format!("unknown script kind {s:?}"))
    }
}

/// An ordered list of SQL statements. Statements are kept apart so an
/// adapter can run them one at a time (row-wise inserts must autocommit
/// individually).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlScript {
    pub kind: ScriptKind,
    pub dialect: SqlDialect,
    statements: Vec<String>,
}

impl SqlScript {
    fn new(kind: ScriptKind, dialect: SqlDialect, statements: Vec<String>) -> Self {
        Self {
            kind,
            dialect,
            statements,
        }
    }

    pub fn statements(&self) -> &[String] {
        &self.statements
    }

    /// Script file contents: each statement terminated by `;` and a newline.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.statements {
            out.push_str(s);
            out.push_str(";\n");
        }
        out
    }

    /// e.g. `regmap_query.postgres.sql`
    pub fn file_name(&self) -> String {
        format!("{}.{}.sql", self.kind.tag(), self.dialect.tag())
    }
}

fn safe_token(s: &str) -> Result<&str, SqlGenError> {
    let ok = !s.is_empty()
        && s.len() <= 64
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'));
    if ok {
        Ok(s)
    } else {
        Err(SqlGenError::UnsafeToken(s.to_string()))
    }
}

fn safe_path(s: &str) -> Result<&str, SqlGenError> {
    let ok = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-' | b'/'));
    if ok {
        Ok(s)
    } else {
        Err(SqlGenError::UnsafePath(s.to_string()))
    }
}

/// Which two datasets of the `regions` table a join compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetPair {
    pub query: u32,
    pub reference: u32,
}

impl Default for DatasetPair {
    fn default() -> Self {
        Self { query: 1, reference: 2 }
    }
}

const REGION_COLUMNS: &str = "dataset_id, chrom, chromstart, chromend";

fn with_engine(dialect: SqlDialect, body: String) -> String {
    match dialect.engine() {
        Some(engine) => format!("{body} ENGINE={engine}"),
        None => body,
    }
}

/// Schema: `regiondesc`, `regions` and the `regions_staging` load table.
pub fn emit_ddl(dialect: SqlDialect) -> SqlScript {
    let id_column = if dialect.is_mysql() {
        "id BIGINT NOT NULL AUTO_INCREMENT PRIMARY KEY"
    } else {
        "id BIGSERIAL PRIMARY KEY"
    };
    let statements = vec![
        "DROP VIEW IF EXISTS vwregions".to_string(),
        "DROP TABLE IF EXISTS regions_staging".to_string(),
        "DROP TABLE IF EXISTS regions".to_string(),
        "DROP TABLE IF EXISTS regiondesc".to_string(),
        with_engine(
            dialect,
            "CREATE TABLE regiondesc (\n    \
             dataset_id INTEGER NOT NULL PRIMARY KEY,\n    \
             name VARCHAR(255) NOT NULL,\n    \
             factor VARCHAR(255),\n    \
             cell_line VARCHAR(255),\n    \
             treatment VARCHAR(255),\n    \
             assembly VARCHAR(32)\n)"
                .to_string(),
        ),
        with_engine(
            dialect,
            format!(
                "CREATE TABLE regions (\n    \
                 {id_column},\n    \
                 dataset_id INTEGER NOT NULL,\n    \
                 chrom VARCHAR(64) NOT NULL,\n    \
                 chromstart BIGINT NOT NULL,\n    \
                 chromend BIGINT NOT NULL\n)"
            ),
        ),
        "CREATE INDEX regions_dataset_idx ON regions (dataset_id)".to_string(),
        with_engine(
            dialect,
            "CREATE TABLE regions_staging (\n    \
             chrom VARCHAR(64) NOT NULL,\n    \
             chromstart BIGINT NOT NULL,\n    \
             chromend BIGINT NOT NULL\n)"
                .to_string(),
        ),
    ];
    SqlScript::new(ScriptKind::Ddl, dialect, statements)
}

const VALID_PAIR: &str = "a.chromstart >= 0 AND a.chromend >= a.chromstart\n  \
                          AND b.chromstart >= 0 AND b.chromend >= b.chromstart";

/// The `vwregions` view (bp overlap by four-branch CASE, centre distance by
/// integer division) and a filtered selection of one dataset pair.
///
/// The distance filter compares doubled centres so that it accepts exactly
/// the pairs the native engine accepts; the reported `centredistance` column
/// keeps the truncating integer form.
pub fn emit_regmap_query(dialect: SqlDialect, filter: &JoinFilter, datasets: DatasetPair) -> SqlScript {
    let centre = format!(
        "abs({} - {})",
        dialect.halve("a.chromend + a.chromstart"),
        dialect.halve("b.chromend + b.chromstart")
    );
    let view = format!(
        "CREATE OR REPLACE VIEW vwregions AS\n\
         SELECT a.dataset_id AS a_dataset_id,\n       \
         b.dataset_id AS b_dataset_id,\n       \
         a.id AS a_id,\n       \
         b.id AS b_id,\n       \
         a.chrom AS chrom,\n       \
         CASE\n           \
         WHEN a.chromend <= b.chromend AND a.chromstart >= b.chromstart THEN (a.chromend - a.chromstart)\n           \
         WHEN b.chromend <= a.chromend AND b.chromstart >= a.chromstart THEN (b.chromend - b.chromstart)\n           \
         WHEN a.chromend <= b.chromend AND a.chromstart <= b.chromstart THEN (a.chromend - b.chromstart)\n           \
         WHEN a.chromend >= b.chromend AND a.chromstart >= b.chromstart THEN (b.chromend - a.chromstart)\n       \
         END AS bpoverlap,\n       \
         {centre} AS centredistance,\n       \
         abs((a.chromend + a.chromstart) - (b.chromend + b.chromstart)) AS centredistance_x2\n\
         FROM regions a\n\
         JOIN regions b ON b.chrom = a.chrom\n\
         WHERE {VALID_PAIR}"
    );
    let mut select = format!(
        "SELECT a_id, b_id, chrom, bpoverlap, centredistance\n\
         FROM vwregions\n\
         WHERE a_dataset_id = {} AND b_dataset_id = {}\n  \
         AND bpoverlap >= {}",
        datasets.query, datasets.reference, filter.min_bp
    );
    if let Some(bound) = filter.max_centre_distance {
        let _ = write!(select, "\n  AND centredistance_x2 < {}", bound.doubled());
    }
    select.push_str("\nORDER BY a_id, b_id");
    SqlScript::new(ScriptKind::RegmapQuery, dialect, vec![view, select])
}

/// Boolean spatial intersection join. Each region becomes a zero-height
/// segment on the x axis; the predicate treats segments as closed, so
/// touching regions match.
pub fn emit_geo_query(dialect: SqlDialect, datasets: DatasetPair) -> SqlScript {
    let predicate = if dialect.is_mysql() {
        "MBRIntersects(LineString(Point(a.chromstart, 0), Point(a.chromend, 0)),\n                    \
         LineString(Point(b.chromstart, 0), Point(b.chromend, 0)))"
    } else {
        "box(point(a.chromstart, 0), point(a.chromend, 0)) && box(point(b.chromstart, 0), point(b.chromend, 0))"
    };
    let query = format!(
        "SELECT a.id AS a_id, b.id AS b_id\n\
         FROM regions a\n\
         JOIN regions b ON b.chrom = a.chrom\n\
         WHERE a.dataset_id = {} AND b.dataset_id = {}\n  \
         AND {VALID_PAIR}\n  \
         AND {predicate}\n\
         ORDER BY a_id, b_id",
        datasets.query, datasets.reference
    );
    SqlScript::new(ScriptKind::GeoQuery, dialect, vec![query])
}

/// Staging load of a server-side tab-separated file, copy into `regions`
/// under `dataset_id`, then empty the staging table.
pub fn emit_bulk_import(dialect: SqlDialect, path: &str, dataset_id: u32) -> Result<SqlScript, SqlGenError> {
    let path = safe_path(path)?;
    let load = if dialect.is_mysql() {
        format!(
            "LOAD DATA INFILE '{path}' INTO TABLE regions_staging\n\
             FIELDS TERMINATED BY '\\t' LINES TERMINATED BY '\\n'\n\
             (chrom, chromstart, chromend)"
        )
    } else {
        format!("COPY regions_staging (chrom, chromstart, chromend) FROM '{path}'")
    };
    let copy = format!(
        "INSERT INTO regions ({REGION_COLUMNS})\n\
         SELECT {dataset_id}, chrom, chromstart, chromend FROM regions_staging"
    );
    Ok(SqlScript::new(
        ScriptKind::BulkImport,
        dialect,
        vec![load, copy, "TRUNCATE TABLE regions_staging".to_string()],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomGenParams {
    pub count: u64,
    pub coord_lower: i64,
    pub coord_upper: i64,
    pub max_size: u64,
    pub fixed_size: bool,
    pub dataset_id: u32,
}

impl Default for RandomGenParams {
    fn default() -> Self {
        Self {
            count: 5000,
            coord_lower: 0,
            coord_upper: 200_000_000,
            max_size: 500,
            fixed_size: false,
            dataset_id: 1,
        }
    }
}

fn digits_table() -> String {
    let mut s = String::from("(SELECT 0 AS d");
    for d in 1..10 {
        let _ = write!(s, " UNION ALL SELECT {d}");
    }
    s.push(')');
    s
}

/// Generates `count` random regions into a temporary in-memory table and
/// moves them into `regions` in one transaction.
pub fn emit_random_gen(dialect: SqlDialect, p: &RandomGenParams) -> Result<SqlScript, SqlGenError> {
    if p.count < 1 {
        return Err(SqlGenError::InvalidParams("count must be at least 1".into()));
    }
    if p.max_size < 1 {
        return Err(SqlGenError::InvalidParams("max_size must be at least 1".into()));
    }
    let range = p.coord_upper.checked_sub(p.coord_lower).unwrap_or(-1);
    if range <= p.max_size as i64 {
        return Err(SqlGenError::InvalidParams(format!(
            "coordinate range [{}, {}] must be wider than max_size {}",
            p.coord_lower, p.coord_upper, p.max_size
        )));
    }
    let span = range + 1;
    let mysql = dialect.is_mysql();
    let quoted: Vec<String> = DEFAULT_CHROMOSOMES.iter().map(|c| format!("'{c}'")).collect();
    let n_chrom = DEFAULT_CHROMOSOMES.len();

    let table = "CREATE TEMPORARY TABLE regions_gen (\n    \
                 chrom VARCHAR(64) NOT NULL,\n    \
                 size BIGINT NOT NULL,\n    \
                 chromstart BIGINT NOT NULL,\n    \
                 chromend BIGINT NOT NULL\n)";
    let table = if mysql {
        format!("{table} ENGINE=MEMORY")
    } else {
        table.to_string()
    };

    let (chrom_expr, size_expr, source) = if mysql {
        let size = if p.fixed_size {
            p.max_size.to_string()
        } else {
            format!("1 + FLOOR(RAND() * {})", p.max_size)
        };
        let digits = (p.count - 1).max(1).ilog10() as usize + 1;
        let mut from = String::new();
        let mut ordinal = Vec::new();
        for i in 0..digits {
            if i == 0 {
                let _ = write!(from, "FROM {} d0", digits_table());
            } else {
                let _ = write!(from, "\nCROSS JOIN {} d{i}", digits_table());
            }
            ordinal.push(if i == 0 {
                "d0.d".to_string()
            } else {
                format!("{} * d{i}.d", 10u64.pow(i as u32))
            });
        }
        let _ = write!(from, "\nWHERE {} < {}", ordinal.join(" + "), p.count);
        (
            format!("ELT(1 + FLOOR(RAND() * {n_chrom}), {})", quoted.join(", ")),
            size,
            from,
        )
    } else {
        let size = if p.fixed_size {
            p.max_size.to_string()
        } else {
            format!("1 + floor(random() * {})::bigint", p.max_size)
        };
        (
            format!("(ARRAY[{}])[1 + floor(random() * {n_chrom})::int]", quoted.join(", ")),
            size,
            format!("FROM generate_series(1, {})", p.count),
        )
    };
    let fill = format!(
        "INSERT INTO regions_gen (chrom, size, chromstart, chromend)\n\
         SELECT {chrom_expr}, {size_expr}, 0, 0\n{source}"
    );
    let place = if mysql {
        format!(
            "UPDATE regions_gen SET chromstart = {} + FLOOR(RAND() * ({span} - size))",
            p.coord_lower
        )
    } else {
        format!(
            "UPDATE regions_gen SET chromstart = {} + floor(random() * ({span} - size))::bigint",
            p.coord_lower
        )
    };
    let drop = if mysql {
        "DROP TEMPORARY TABLE regions_gen"
    } else {
        "DROP TABLE regions_gen"
    };
    let statements = vec![
        table,
        fill,
        place,
        "UPDATE regions_gen SET chromend = chromstart + size".to_string(),
        dialect.begin().to_string(),
        format!(
            "INSERT INTO regions ({REGION_COLUMNS})\n\
             SELECT {}, chrom, chromstart, chromend FROM regions_gen",
            p.dataset_id
        ),
        "COMMIT".to_string(),
        drop.to_string(),
    ];
    Ok(SqlScript::new(ScriptKind::RandomGen, dialect, statements))
}

fn value_tuple(dataset_id: u32, r: &GenomicRegion) -> Result<String, SqlGenError> {
    Ok(format!(
        "({dataset_id}, '{}', {}, {})",
        safe_token(r.chrom())?,
        r.start(),
        r.end()
    ))
}

/// One autocommitted `INSERT` per region.
pub fn emit_rowwise_insert(
    dialect: SqlDialect,
    dataset_id: u32,
    regions: &[GenomicRegion],
) -> Result<SqlScript, SqlGenError> {
    let statements = regions
        .iter()
        .map(|r| {
            Ok(format!(
                "INSERT INTO regions ({REGION_COLUMNS}) VALUES {}",
                value_tuple(dataset_id, r)?
            ))
        })
        .collect::<Result<_, SqlGenError>>()?;
    Ok(SqlScript::new(ScriptKind::RowwiseInsert, dialect, statements))
}

/// Rows per multi-row `INSERT` in a batch script.
pub const BATCH_CHUNK: usize = 1000;

/// All regions in a single transaction, as multi-row inserts of up to
/// [`BATCH_CHUNK`] rows.
pub fn emit_batch_insert(
    dialect: SqlDialect,
    dataset_id: u32,
    regions: &[GenomicRegion],
) -> Result<SqlScript, SqlGenError> {
    let mut statements = vec![dialect.begin().to_string()];
    for chunk in regions.chunks(BATCH_CHUNK) {
        let values = chunk
            .iter()
            .map(|r| value_tuple(dataset_id, r))
            .collect::<Result<Vec<_>, _>>()?;
        statements.push(format!(
            "INSERT INTO regions ({REGION_COLUMNS}) VALUES\n{}",
            values.join(",\n")
        ));
    }
    statements.push("COMMIT".to_string());
    Ok(SqlScript::new(ScriptKind::BatchInsert, dialect, statements))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProximityParams {
    pub chrom: String,
    pub position: i64,
    pub window: u64,
}

impl Default for ProximityParams {
    /// 100 kb either side of the MYC transcription start site.
    fn default() -> Self {
        Self {
            chrom: "chr8".into(),
            position: 128_748_314,
            window: 100_000,
        }
    }
}

const REGION_SELECT: &str = "SELECT id, dataset_id, chrom, chromstart, chromend\nFROM regions";

pub fn emit_invalid_search(dialect: SqlDialect) -> SqlScript {
    SqlScript::new(
        ScriptKind::InvalidSearch,
        dialect,
        vec![format!(
            "{REGION_SELECT}\nWHERE chromstart < 0 OR chromend < chromstart\nORDER BY id"
        )],
    )
}

/// Valid regions sharing a base with `[position - window, position + window)`.
pub fn emit_proximity_search(dialect: SqlDialect, p: &ProximityParams) -> Result<SqlScript, SqlGenError> {
    if p.window < 1 {
        return Err(SqlGenError::InvalidParams("window must be at least 1".into()));
    }
    let chrom = safe_token(&p.chrom)?;
    let w = i64::try_from(p.window).map_err(|_| SqlGenError::InvalidParams("window too large".into()))?;
    let (lo, hi) = (p.position.saturating_sub(w), p.position.saturating_add(w));
    Ok(SqlScript::new(
        ScriptKind::ProximitySearch,
        dialect,
        vec![format!(
            "{REGION_SELECT}\n\
             WHERE chrom = '{chrom}'\n  \
             AND chromstart >= 0 AND chromend > chromstart\n  \
             AND chromstart < {hi} AND chromend > {lo}\n\
             ORDER BY id"
        )],
    ))
}

pub fn emit_search_queries(dialect: SqlDialect, p: &ProximityParams) -> Result<Vec<SqlScript>, SqlGenError> {
    Ok(vec![emit_invalid_search(dialect), emit_proximity_search(dialect, p)?])
}

/// Parameters for emitting every script kind at once.
#[derive(Debug, Clone)]
pub struct ScriptParams {
    pub filter: JoinFilter,
    pub datasets: DatasetPair,
    pub import_path: String,
    pub random: RandomGenParams,
    pub insert_regions: Vec<GenomicRegion>,
    pub proximity: ProximityParams,
}

impl Default for ScriptParams {
    fn default() -> Self {
        Self {
            filter: JoinFilter::default(),
            datasets: DatasetPair::default(),
            import_path: "/tmp/regions.bed".into(),
            random: RandomGenParams::default(),
            insert_regions: Vec::new(),
            proximity: ProximityParams::default(),
        }
    }
}

pub fn emit(kind: ScriptKind, dialect: SqlDialect, p: &ScriptParams) -> Result<SqlScript, SqlGenError> {
    match kind {
        ScriptKind::Ddl => Ok(emit_ddl(dialect)),
        ScriptKind::RegmapQuery => Ok(emit_regmap_query(dialect, &p.filter, p.datasets)),
        ScriptKind::GeoQuery => Ok(emit_geo_query(dialect, p.datasets)),
        ScriptKind::BulkImport => emit_bulk_import(dialect, &p.import_path, p.datasets.query),
        ScriptKind::RandomGen => emit_random_gen(dialect, &p.random),
        ScriptKind::RowwiseInsert => emit_rowwise_insert(dialect, p.datasets.query, &p.insert_regions),
        ScriptKind::BatchInsert => emit_batch_insert(dialect, p.datasets.query, &p.insert_regions),
        ScriptKind::InvalidSearch => Ok(emit_invalid_search(dialect)),
        ScriptKind::ProximitySearch => emit_proximity_search(dialect, &p.proximity),
    }
}
