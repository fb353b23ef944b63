//! BED-like region files and the dataset catalog.
//!
//! Only the first three tab-separated columns are read. Coordinates are kept
//! as [`RawRegion`]s: a negative start or an end before the start is not a
//! parse error, those records are validated later by the region store.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::intervals::{valid_chrom, GenomicRegion, RawRegion};

#[derive(Debug, Error)]
pub enum BedError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}, column {column}: {reason}")]
    Malformed {
        line: usize,
        column: usize,
        reason: RejectReason,
    },
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("catalog is missing the header line")]
    MissingHeader,
    #[error("catalog header must be {expected:?}, found {found:?}")]
    BadHeader { expected: String, found: String },
    #[error("catalog line {line}: expected 6 columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("catalog line {line}: empty {field}")]
    EmptyField { line: usize, field: &'static str },
    #[error("catalog line {line}: duplicate dataset name {name:?}")]
    DuplicateName { line: usize, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    Strict,
    /// Record malformed lines in the report and keep going.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("missing column")]
    MissingColumn,
    #[error("invalid chromosome")]
    InvalidChrom,
    #[error("non-integer start")]
    NonIntegerStart,
    #[error("non-integer end")]
    NonIntegerEnd,
}

impl RejectReason {
    /// 1-based column the reason refers to.
    pub fn column(self) -> usize {
        match self {
            RejectReason::InvalidChrom => 1,
            RejectReason::NonIntegerStart => 2,
            RejectReason::NonIntegerEnd | RejectReason::MissingColumn => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub accepted: usize,
    pub rejected: usize,
    pub rejects: Vec<Reject>,
}

/// Parses a coordinate made of ASCII digits with an optional leading minus
/// sign (either `-` or U+2212).
pub(crate) fn parse_coordinate(field: &str) -> Option<i64> {
    let (negative, digits) = if let Some(rest) = field.strip_prefix('-') {
        (true, rest)
    } else if let Some(rest) = field.strip_prefix('\u{2212}') {
        (true, rest)
    } else {
        (false, field)
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let magnitude: i128 = digits.parse().ok()?;
    let value = if negative { -magnitude } else { magnitude };
    i64::try_from(value).ok()
}

fn is_skipped(line: &str) -> bool {
    line.trim().is_empty() || line.starts_with('#') || line.starts_with("track") || line.starts_with("browser")
}

fn parse_line(line: &str) -> Result<RawRegion, RejectReason> {
    let mut fields = line.split('\t');
    let chrom = fields.next().unwrap_or_default();
    let start = fields.next().ok_or(RejectReason::MissingColumn)?;
    let end = fields.next().ok_or(RejectReason::MissingColumn)?;
    if !valid_chrom(chrom) {
        return Err(RejectReason::InvalidChrom);
    }
    let start = parse_coordinate(start).ok_or(RejectReason::NonIntegerStart)?;
    let end = parse_coordinate(end).ok_or(RejectReason::NonIntegerEnd)?;
    Ok(RawRegion::new(chrom, start, end))
}

/// Streaming reader over the data lines of a BED-like file.
///
/// Yields `(line_number, record)` for every line that is not blank or a
/// comment/`track`/`browser` header; the inner result carries the reject
/// reason for malformed lines.
pub struct BedRecords<R> {
    source: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> BedRecords<R> {
    pub fn new(source: R) -> Self {
        Self {
            source,
            line_no: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for BedRecords<R> {
    type Item = io::Result<(usize, Result<RawRegion, RejectReason>)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.source.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e)),
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if is_skipped(line) {
                continue;
            }
            return Some(Ok((self.line_no, parse_line(line))));
        }
    }
}

pub fn parse_bed<R: BufRead>(source: R, mode: ParseMode) -> Result<(Vec<RawRegion>, ParseReport), BedError> {
    let mut regions = Vec::new();
    let mut report = ParseReport::default();
    for item in BedRecords::new(source) {
        let (line, record) = item?;
        match record {
            Ok(region) => {
                report.accepted += 1;
                regions.push(region);
            }
            Err(reason) => {
                if mode == ParseMode::Strict {
                    return Err(BedError::Malformed {
                        line,
                        column: reason.column(),
                        reason,
                    });
                }
                report.rejected += 1;
                report.rejects.push(Reject { line, reason });
            }
        }
    }
    Ok((regions, report))
}

pub fn write_bed<W: Write>(regions: &[GenomicRegion], mut sink: W) -> io::Result<()> {
    for r in regions {
        writeln!(sink, "{}\t{}\t{}", r.chrom(), r.start(), r.end())?;
    }
    sink.flush()
}

pub const CATALOG_HEADER: &str = "name\tfactor\tcell_line\ttreatment\tassembly\tpath";

/// Assemblies the bundled data and reports are organised around. Any other
/// non-empty assembly name is accepted as well.
pub const KNOWN_ASSEMBLIES: [&str; 4] = ["hg19", "hg18", "mm9", "mm8"];

/// One dataset in the catalog, carrying the metadata the mining report is
/// broken down by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    pub factor: String,
    pub cell_line: String,
    pub treatment: Option<String>,
    pub assembly: String,
    pub path: PathBuf,
}

impl CatalogEntry {
    /// Resolves a relative `path` against `base` (usually the catalog's directory).
    pub fn resolved_path(&self, base: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        }
    }
}

pub fn load_catalog<R: BufRead>(source: R) -> Result<Vec<CatalogEntry>, CatalogError> {
    let mut lines = source.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(CatalogError::MissingHeader),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let header = header.trim_end_matches('\r');
    if header != CATALOG_HEADER {
        if header.split('\t').next() != Some("name") {
            return Err(CatalogError::MissingHeader);
        }
        return Err(CatalogError::BadHeader {
            expected: CATALOG_HEADER.to_string(),
            found: header.to_string(),
        });
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(CatalogError::ColumnCount {
                line: line_no,
                found: fields.len(),
            });
        }
        for (value, field) in [
            (fields[0], "name"),
            (fields[1], "factor"),
            (fields[4], "assembly"),
            (fields[5], "path"),
        ] {
            if value.trim().is_empty() {
                return Err(CatalogError::EmptyField { line: line_no, field });
            }
        }
        let name = fields[0].to_string();
        if !seen.insert(name.clone()) {
            return Err(CatalogError::DuplicateName { line: line_no, name });
        }
        entries.push(CatalogEntry {
            name,
            factor: fields[1].to_string(),
            cell_line: fields[2].to_string(),
            treatment: Some(fields[3]).filter(|t| !t.is_empty()).map(str::to_string),
            assembly: fields[4].to_string(),
            path: PathBuf::from(fields[5]),
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, mode: ParseMode) -> Result<(Vec<RawRegion>, ParseReport), BedError> {
        parse_bed(text.as_bytes(), mode)
    }

    #[test]
    fn parses_basic_line() {
        let (regions, report) = parse("chr1\t0\t500\n", ParseMode::Strict).unwrap();
        assert_eq!(regions, vec![RawRegion::new("chr1", 0, 500)]);
        assert_eq!(report.accepted, 1);
        assert_eq!(report.rejected, 0);
    }

    #[test]
    fn keeps_invalid_coordinates() {
        let (regions, report) = parse("chr1\t-5\t100\n", ParseMode::Permissive).unwrap();
        assert_eq!(regions, vec![RawRegion::new("chr1", -5, 100)]);
        assert_eq!(report.accepted, 1);
        let (regions, _) = parse("chr1\t50\t10\n", ParseMode::Strict).unwrap();
        assert_eq!(regions, vec![RawRegion::new("chr1", 50, 10)]);
        let (regions, _) = parse("chr1\t\u{2212}5\t10\n", ParseMode::Strict).unwrap();
        assert_eq!(regions[0].start, -5);
    }

    #[test]
    fn permissive_records_rejects() {
        let (regions, report) = parse("chr1\tabc\t100\n", ParseMode::Permissive).unwrap();
        assert!(regions.is_empty());
        assert_eq!(report.rejected, 1);
        assert_eq!(report.rejects[0].reason.to_string(), "non-integer start");
        assert_eq!(report.rejects[0].line, 1);
    }

    #[test]
    fn strict_reports_line_and_column() {
        let err = parse("# c\nchr1\t0\t5\nchr1\t1\tx\n", ParseMode::Strict).unwrap_err();
        match err {
            BedError::Malformed { line, column, reason } => {
                assert_eq!((line, column), (3, 3));
                assert_eq!(reason, RejectReason::NonIntegerEnd);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn skips_headers_and_extra_columns() {
        let text = "track name=x\nbrowser position chr1\n#comment\n\nchr2\t1\t2\tpeak1\t900\t+\r\nchr3\t4\t8\n";
        let (regions, report) = parse(text, ParseMode::Strict).unwrap();
        assert_eq!(
            regions,
            vec![RawRegion::new("chr2", 1, 2), RawRegion::new("chr3", 4, 8)]
        );
        assert_eq!(report.accepted, 2);
    }

    #[test]
    fn rejects_locale_and_sign_variants() {
        for bad in ["+5", "1,000", "1e3", " 5", "5 ", "٣", ""] {
            assert_eq!(parse_coordinate(bad), None, "{bad:?}");
        }
        assert_eq!(parse_coordinate("-0"), Some(0));
        assert_eq!(parse_coordinate("99999999999999999999"), None);
        let (_, report) = parse("chr1\t5\n", ParseMode::Permissive).unwrap();
        assert_eq!(report.rejects[0].reason, RejectReason::MissingColumn);
        let (_, report) = parse("chr 1\t5\t6\n", ParseMode::Permissive).unwrap();
        assert_eq!(report.rejects[0].reason, RejectReason::InvalidChrom);
    }

    #[test]
    fn write_bed_lines() {
        let mut out = Vec::new();
        write_bed(&[GenomicRegion::new("chr1", 0, 500).unwrap()], &mut out).unwrap();
        assert_eq!(out, b"chr1\t0\t500\n");
        let mut out = Vec::new();
        write_bed(&[], &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn catalog_basic() {
        let text = format!("{CATALOG_HEADER}\nds1\tHNF4G\tHepG2\t\thg19\tds1.bed\n");
        let entries = load_catalog(text.as_bytes()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].treatment, None);
        assert_eq!(entries[0].factor, "HNF4G");
        assert_eq!(entries[0].path, PathBuf::from("ds1.bed"));
    }

    #[test]
    fn catalog_preserves_order_and_rejects_duplicates() {
        let text =
            format!("{CATALOG_HEADER}\nb\tF\tC\tE2\thg19\tb.bed\na\tF\tC\t\thg19\ta.bed\nc\tF\tC\t\tmm9\tc.bed\n");
        let names: Vec<_> = load_catalog(text.as_bytes())
            .unwrap()
            .into_iter()
            .map(|e| e.name)
            .collect();
        assert_eq!(names, ["b", "a", "c"]);

        let dup = format!("{CATALOG_HEADER}\na\tF\tC\t\thg19\ta.bed\na\tG\tC\t\thg19\tb.bed\n");
        match load_catalog(dup.as_bytes()) {
            Err(CatalogError::DuplicateName { name, line }) => {
                assert_eq!(name, "a");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(load_catalog(&b""[..]), Err(CatalogError::MissingHeader)));
        assert!(matches!(
            load_catalog(&b"ds1\tF\tC\t\thg19\tx.bed\n"[..]),
            Err(CatalogError::MissingHeader)
        ));
        assert!(matches!(
            load_catalog(&b"name\tfactor\n"[..]),
            Err(CatalogError::BadHeader { .. })
        ));
        let short = format!("{CATALOG_HEADER}\na\tF\tC\thg19\ta.bed\n");
        assert!(matches!(
            load_catalog(short.as_bytes()),
            Err(CatalogError::ColumnCount { line: 2, found: 5 })
        ));
        let no_assembly = format!("{CATALOG_HEADER}\na\tF\tC\t\t\ta.bed\n");
        assert!(matches!(
            load_catalog(no_assembly.as_bytes()),
            Err(CatalogError::EmptyField { field: "assembly", .. })
        ));
    }

    fn region_list() -> impl Strategy<Value = Vec<GenomicRegion>> {
        prop::collection::vec(("chr[0-9XYM]{1,2}", 0i64..1_000_000_000, 0i64..100_000), 0..50).prop_map(|v| {
            v.into_iter()
                .map(|(c, s, l)| GenomicRegion::new(c, s, s + l).unwrap())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(regions in region_list()) {
            let mut buf = Vec::new();
            write_bed(&regions, &mut buf).unwrap();
            let (parsed, report) = parse_bed(&buf[..], ParseMode::Strict).unwrap();
            prop_assert_eq!(report.accepted, regions.len());
            let back: Vec<GenomicRegion> =
                parsed.into_iter().map(|r| r.validate().unwrap()).collect();
            prop_assert_eq!(back, regions);
        }

        #[test]
        fn permissive_accounting_balances(lines in prop::collection::vec("[a-z0-9#\\-]{0,6}(\t[0-9a-z\\-]{0,4}){0,4}", 0..30)) {
            let text = lines.join("\n");
            let (_, report) = parse_bed(text.as_bytes(), ParseMode::Permissive).unwrap();
            let data_lines = lines.iter().filter(|l| !is_skipped(l)).count();
            prop_assert_eq!(report.accepted + report.rejected, data_lines);
            prop_assert_eq!(report.rejects.len(), report.rejected);
        }
    }
}
