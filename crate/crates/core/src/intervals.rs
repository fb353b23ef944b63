//! Interval algebra on genomic regions.
//!
//! Coordinates are 0-based and half-open (BED convention): a region covers
//! bases `start..end` and its length is `end - start`. Two regions share at
//! least one base exactly when their signed bp overlap is positive; adjacent
//! regions have a bp overlap of zero.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("chromosome name must be non-empty and free of whitespace: {0:?}")]
    InvalidChrom(String),
    #[error("negative start coordinate {start} on {chrom}")]
    NegativeStart { chrom: String, start: i64 },
    #[error("end {end} is less than start {start} on {chrom}")]
    EndBeforeStart { chrom: String, start: i64, end: i64 },
    #[error("regions are on different chromosomes ({0} vs {1})")]
    ChromMismatch(String, String),
}

pub(crate) fn valid_chrom(chrom: &str) -> bool {
    !chrom.is_empty() && !chrom.chars().any(char::is_whitespace)
}

/// An unvalidated `(chrom, start, end)` record as read from a file.
///
/// No ordering between `start` and `end` is enforced so malformed records can
/// be stored and found again later.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawRegion {
    pub chrom: String,
    pub start: i64,
    pub end: i64,
}

impl RawRegion {
    pub fn new(chrom: impl Into<String>, start: i64, end: i64) -> Self {
        Self {
            chrom: chrom.into(),
            start,
            end,
        }
    }

    /// True when the record satisfies the [`GenomicRegion`] invariants.
    pub fn is_valid(&self) -> bool {
        self.start >= 0 && self.end >= self.start && valid_chrom(&self.chrom)
    }

    pub fn validate(&self) -> Result<GenomicRegion, RegionError> {
        GenomicRegion::new(self.chrom.clone(), self.start, self.end)
    }
}

impl From<GenomicRegion> for RawRegion {
    fn from(r: GenomicRegion) -> Self {
        RawRegion {
            chrom: r.chrom,
            start: r.start,
            end: r.end,
        }
    }
}

impl From<&GenomicRegion> for RawRegion {
    fn from(r: &GenomicRegion) -> Self {
        r.clone().into()
    }
}

/// A validated region: `0 <= start <= end`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenomicRegion {
    chrom: String,
    start: i64,
    end: i64,
}

impl GenomicRegion {
    pub fn new(chrom: impl Into<String>, start: i64, end: i64) -> Result<Self, RegionError> {
        let chrom = chrom.into();
        if !valid_chrom(&chrom) {
            return Err(RegionError::InvalidChrom(chrom));
        }
        if start < 0 {
            return Err(RegionError::NegativeStart { chrom, start });
        }
        if end < start {
            return Err(RegionError::EndBeforeStart { chrom, start, end });
        }
        Ok(Self { chrom, start, end })
    }

    #[inline]
    pub fn chrom(&self) -> &str {
        &self.chrom
    }

    #[inline]
    pub fn start(&self) -> i64 {
        self.start
    }

    #[inline]
    pub fn end(&self) -> i64 {
        self.end
    }

    /// `end - start`.
    #[inline]
    pub fn len(&self) -> i64 {
        self.end - self.start
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Twice the centre coordinate, which is always an integer.
    #[inline]
    pub fn doubled_centre(&self) -> i64 {
        self.start + self.end
    }

    /// Returns a copy moved right by `offset` bases.
    pub fn shifted(&self, offset: i64) -> Result<Self, RegionError> {
        GenomicRegion::new(self.chrom.clone(), self.start + offset, self.end + offset)
    }
}

impl TryFrom<RawRegion> for GenomicRegion {
    type Error = RegionError;

    fn try_from(raw: RawRegion) -> Result<Self, Self::Error> {
        GenomicRegion::new(raw.chrom, raw.start, raw.end)
    }
}

impl fmt::Display for GenomicRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.chrom, self.start, self.end)
    }
}

/// `end - start`.
#[inline]
pub fn region_length(r: &GenomicRegion) -> i64 {
    r.len()
}

/// The four relative placements of region A against region B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelativePosition {
    AWithinB,
    BWithinA,
    ALeftOfB,
    ARightOfB,
}

impl RelativePosition {
    pub const ALL: [RelativePosition; 4] = [
        RelativePosition::AWithinB,
        RelativePosition::BWithinA,
        RelativePosition::ALeftOfB,
        RelativePosition::ARightOfB,
    ];

    /// Branch condition on raw coordinates.
    #[inline]
    pub fn holds(self, a: (i64, i64), b: (i64, i64)) -> bool {
        let ((a_start, a_end), (b_start, b_end)) = (a, b);
        match self {
            RelativePosition::AWithinB => a_end <= b_end && a_start >= b_start,
            RelativePosition::BWithinA => b_end <= a_end && b_start >= a_start,
            RelativePosition::ALeftOfB => a_end <= b_end && a_start <= b_start,
            RelativePosition::ARightOfB => a_end >= b_end && a_start >= b_start,
        }
    }

    /// The bp overlap formula attached to this branch.
    #[inline]
    pub fn bp_formula(self, a: (i64, i64), b: (i64, i64)) -> i64 {
        let ((a_start, a_end), (b_start, b_end)) = (a, b);
        match self {
            RelativePosition::AWithinB => a_end - a_start,
            RelativePosition::BWithinA => b_end - b_start,
            RelativePosition::ALeftOfB => a_end - b_start,
            RelativePosition::ARightOfB => b_end - a_start,
        }
    }
}

/// First branch, in CASE order, whose condition holds.
#[inline]
pub(crate) fn classify_coords(a: (i64, i64), b: (i64, i64)) -> RelativePosition {
    for pos in RelativePosition::ALL {
        if pos.holds(a, b) {
            return pos;
        }
    }
    // The remaining configuration would need a_end > b_end with a_start < b_start,
    // which is B within A and was matched above.
    unreachable!("relative position branches are exhaustive")
}

#[inline]
pub(crate) fn case_bp_overlap(a: (i64, i64), b: (i64, i64)) -> i64 {
    classify_coords(a, b).bp_formula(a, b)
}

#[inline]
fn coords(r: &GenomicRegion) -> (i64, i64) {
    (r.start, r.end)
}

fn same_chrom(a: &GenomicRegion, b: &GenomicRegion) -> Result<(), RegionError> {
    if a.chrom == b.chrom {
        Ok(())
    } else {
        Err(RegionError::ChromMismatch(a.chrom.clone(), b.chrom.clone()))
    }
}

/// Signed number of bases shared by `a` and `b` (positive) or separating them
/// (negative), evaluated through the four-branch case analysis.
pub fn bp_overlap(a: &GenomicRegion, b: &GenomicRegion) -> Result<i64, RegionError> {
    same_chrom(a, b)?;
    Ok(case_bp_overlap(coords(a), coords(b)))
}

pub fn classify(a: &GenomicRegion, b: &GenomicRegion) -> Result<RelativePosition, RegionError> {
    same_chrom(a, b)?;
    Ok(classify_coords(coords(a), coords(b)))
}

/// A non-negative distance kept in half base-pair units so region centres
/// never need rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfBp(u64);

impl HalfBp {
    pub const ZERO: HalfBp = HalfBp(0);

    pub fn from_doubled(doubled: u64) -> Self {
        HalfBp(doubled)
    }

    pub fn from_bp(bp: u64) -> Self {
        HalfBp(bp * 2)
    }

    /// Value times two.
    pub fn doubled(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn floor_bp(self) -> u64 {
        self.0 / 2
    }

    pub fn ceil_bp(self) -> u64 {
        self.0.div_ceil(2)
    }
}

impl fmt::Display for HalfBp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("expected a non-negative distance in steps of 0.5, got {0:?}")]
pub struct ParseHalfBpError(String);

impl FromStr for HalfBp {
    type Err = ParseHalfBpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseHalfBpError(s.to_string());
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let whole: u64 = whole.parse().map_err(|_| err())?;
        let half = match frac.trim_end_matches('0') {
            "" => 0,
            "5" => 1,
            _ => return Err(err()),
        };
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        whole
            .checked_mul(2)
            .and_then(|d| d.checked_add(half))
            .map(HalfBp)
            .ok_or_else(err)
    }
}

/// Exact distance between the two region centres.
pub fn centre_distance(a: &GenomicRegion, b: &GenomicRegion) -> Result<HalfBp, RegionError> {
    same_chrom(a, b)?;
    Ok(centre_distance_coords(coords(a), coords(b)))
}

#[inline]
pub(crate) fn centre_distance_coords(a: (i64, i64), b: (i64, i64)) -> HalfBp {
    HalfBp(((a.0 + a.1) - (b.0 + b.1)).unsigned_abs())
}

/// Centre distance as an SQL engine computes it on integer columns:
/// each centre is truncated by integer division before subtracting.
pub fn centre_distance_sql_compat(a: &GenomicRegion, b: &GenomicRegion) -> Result<u64, RegionError> {
    same_chrom(a, b)?;
    Ok(((a.end + a.start) / 2 - (b.end + b.start) / 2).unsigned_abs())
}

/// Both derived quantities for one region pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OverlapMetrics {
    pub bp_overlap: i64,
    pub centre_distance: HalfBp,
}

pub fn metrics(a: &GenomicRegion, b: &GenomicRegion) -> Result<OverlapMetrics, RegionError> {
    same_chrom(a, b)?;
    Ok(metrics_coords(coords(a), coords(b)))
}

#[inline]
pub(crate) fn metrics_coords(a: (i64, i64), b: (i64, i64)) -> OverlapMetrics {
    OverlapMetrics {
        bp_overlap: case_bp_overlap(a, b),
        centre_distance: centre_distance_coords(a, b),
    }
}

/// True when `a` and `b` are on the same chromosome and share at least
/// `min_bp` bases. A `min_bp` below 1 is treated as 1.
pub fn overlaps_by(a: &GenomicRegion, b: &GenomicRegion, min_bp: i64) -> bool {
    a.chrom == b.chrom && case_bp_overlap(coords(a), coords(b)) >= min_bp.max(1)
}

/// [`overlaps_by`] with a one-base threshold.
pub fn overlaps(a: &GenomicRegion, b: &GenomicRegion) -> bool {
    overlaps_by(a, b, 1)
}

/// Intersection test on closed segments `[start, end]`, the boolean answer a
/// spatial line-intersection predicate gives. Unlike [`overlaps`] this is true
/// for adjacent regions.
pub fn geo_intersects(a: &GenomicRegion, b: &GenomicRegion) -> bool {
    a.chrom == b.chrom && case_bp_overlap(coords(a), coords(b)) >= 0
}

/// Orders regions by `(chrom, start, end)`.
pub fn cmp_regions(a: &GenomicRegion, b: &GenomicRegion) -> Ordering {
    (a.chrom.as_str(), a.start, a.end).cmp(&(b.chrom.as_str(), b.start, b.end))
}
