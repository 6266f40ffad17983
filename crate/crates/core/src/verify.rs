//! Independent checks that a family of matrices is a partition.
//!
//! Full verification walks every matrix of a level and asserts that
//!
//! - (a) each matrix has pairwise orthogonal rows,
//! - (b) each row is canonical (coordinate 0 is +1),
//! - (c) each of the `2^(m−1)` canonical vectors appears exactly once,
//! - (d) the family has `2^E(n)` members.
//!
//! Coverage is tracked in a bitmap with one bit per canonical vector. Work is
//! split into fixed-size chunks of consecutive flat indices; chunk results
//! are merged in chunk order, so reports do not depend on the thread count.
//!
//! Sampled verification draws flat indices from a ChaCha8 stream seeded with
//! the caller's seed (`rand_chacha::ChaCha8Rng::seed_from_u64`). Indices are
//! drawn with `gen_range(0..size)`, repeats rejected, and after each index
//! one row with `gen_range(0..m)`. When the sample count reaches the family
//! size, every index is checked in order instead, each still paired with a
//! drawn row.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::address::{exponent, family_size, FLAT_INDEX_MAX_LEVEL};
use crate::construction::{
    double_matrix, iter_partition, pair_matrices, PartitionBuilder, FULL_ITERATION_MAX_LEVEL,
};
use crate::error::{Error, Result};
use crate::locate::locate_vector;
use crate::matrix::HadamardMatrix;
use crate::vector::{inner_product, CanonicalVector, Dimension, HadamardVector, Sign};

/// Witnesses kept in a report; further failures are only counted.
pub const MAX_WITNESSES: usize = 256;

const CHUNK: u64 = 1 << 12;

/// First pair of rows `(r, s)`, `r < s`, that is not orthogonal.
pub fn first_non_orthogonal_pair(matrix: &HadamardMatrix) -> Option<(usize, usize)> {
    let m = matrix.size();
    let rows: Vec<HadamardVector> = matrix.rows().collect();
    for r in 0..m {
        for s in r + 1..m {
            if inner_product(&rows[r], &rows[s]).expect("rows share a dimension") != 0 {
                return Some((r, s));
            }
        }
    }
    None
}

pub fn is_hadamard(matrix: &HadamardMatrix) -> bool {
    first_non_orthogonal_pair(matrix).is_none()
}

/// Single-word variant of [`first_non_orthogonal_pair`].
fn first_bad_pair_words(rows: &[u64]) -> Option<(usize, usize)> {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("popcnt") {
            // SAFETY: the CPU supports popcnt.
            return unsafe { first_bad_pair_popcnt(rows) };
        }
    }
    first_bad_pair_portable(rows)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn first_bad_pair_popcnt(rows: &[u64]) -> Option<(usize, usize)> {
    first_bad_pair_portable(rows)
}

#[inline(always)]
fn first_bad_pair_portable(rows: &[u64]) -> Option<(usize, usize)> {
    let half = (rows.len() / 2) as u32;
    for (r, &a) in rows.iter().enumerate() {
        let rest = &rows[r + 1..];
        // count mismatches without branching, then locate the first one
        let bad = rest
            .iter()
            .fold(0u32, |n, &b| n + u32::from((a ^ b).count_ones() != half));
        if bad != 0 {
            let s = rest
                .iter()
                .position(|&b| (a ^ b).count_ones() != half)
                .expect("counted above");
            return Some((r, r + 1 + s));
        }
    }
    None
}

/// One bit per canonical vector of a dimension, set at most once.
#[derive(Debug)]
pub struct CoverageBitmap {
    dim: Dimension,
    bits: u64,
    words: Vec<AtomicU64>,
}

impl CoverageBitmap {
    pub fn new(dim: Dimension) -> Result<Self> {
        if dim.level() > FULL_ITERATION_MAX_LEVEL {
            return Err(Error::LevelTooLargeForFullVerification(dim.level()));
        }
        let bits = 1u64 << (dim.len() - 1);
        let words = (0..bits.div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
        Ok(CoverageBitmap { dim, bits, words })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Number of canonical vectors tracked.
    pub fn len(&self) -> u64 {
        self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sets bit `index`; returns `false` if it was already set.
    pub fn mark_index(&self, index: u64) -> bool {
        let bit = 1u64 << (index % 64);
        self.words[(index / 64) as usize].fetch_or(bit, Ordering::Relaxed) & bit == 0
    }

    pub fn mark(&self, c: &CanonicalVector) -> bool {
        self.mark_index(c.index().expect("bitmap dimensions fit one word"))
    }

    pub fn is_set(&self, index: u64) -> bool {
        self.words[(index / 64) as usize].load(Ordering::Relaxed) >> (index % 64) & 1 == 1
    }

    /// Indices whose bit is clear, ascending.
    pub fn missing(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(move |(w, word)| {
            let base = w as u64 * 64;
            let valid = (self.bits - base).min(64);
            let mask = if valid == 64 {
                u64::MAX
            } else {
                (1 << valid) - 1
            };
            let mut clear = !word.load(Ordering::Relaxed) & mask;
            std::iter::from_fn(move || {
                if clear == 0 {
                    return None;
                }
                let t = clear.trailing_zeros();
                clear &= clear - 1;
                Some(base + u64::from(t))
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    Full,
    Sampled,
    Skipped,
}

impl fmt::Display for CoverageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageMode::Full => "full",
            CoverageMode::Sampled => "sampled",
            CoverageMode::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    NotHadamard {
        matrix: u64,
        rows: (usize, usize),
    },
    NonCanonicalRow {
        matrix: u64,
        row: usize,
    },
    /// All `(matrix, row)` positions holding the same sign class.
    Duplicate {
        vector: HadamardVector,
        at: Vec<(u64, usize)>,
    },
    Missing {
        vector: HadamardVector,
    },
    CountMismatch {
        exponent: u64,
        found: u64,
    },
    LocateMismatch {
        matrix: u64,
        row: usize,
        located: String,
    },
    WrongLevel {
        expected: u32,
        found: u32,
    },
    Unreadable {
        message: String,
    },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::NotHadamard { matrix, rows } => {
                write!(f, "not-hadamard matrix={matrix} rows={},{}", rows.0, rows.1)
            }
            Failure::NonCanonicalRow { matrix, row } => {
                write!(f, "non-canonical matrix={matrix} row={row}")
            }
            Failure::Duplicate { vector, at } => {
                write!(f, "duplicate vector={vector} at=")?;
                for (i, (m, r)) in at.iter().enumerate() {
                    if i > 0 {
                        f.write_char(',')?;
                    }
                    write!(f, "{m}:{r}")?;
                }
                Ok(())
            }
            Failure::Missing { vector } => write!(f, "missing vector={vector}"),
            Failure::CountMismatch { exponent, found } => {
                write!(f, "count matrices={found} expected=2^{exponent}")
            }
            Failure::LocateMismatch {
                matrix,
                row,
                located,
            } => write!(f, "locate matrix={matrix} row={row} located={located}"),
            Failure::WrongLevel { expected, found } => {
                write!(f, "level expected={expected} found={found}")
            }
            Failure::Unreadable { message } => write!(f, "unreadable {message}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub level: u32,
    pub matrices_checked: u64,
    pub rows_checked: u64,
    pub coverage_mode: CoverageMode,
    /// At most [`MAX_WITNESSES`] witnesses, in deterministic order.
    pub failures: Vec<Failure>,
    /// Total number of failures, including those not kept as witnesses.
    pub failure_count: u64,
    pub elapsed: Duration,
}

impl VerifyReport {
    fn new(level: u32, coverage_mode: CoverageMode) -> Self {
        VerifyReport {
            level,
            matrices_checked: 0,
            rows_checked: 0,
            coverage_mode,
            failures: Vec::new(),
            failure_count: 0,
            elapsed: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    pub fn push_failure(&mut self, failure: Failure) {
        self.failure_count += 1;
        if self.failures.len() < MAX_WITNESSES {
            self.failures.push(failure);
        }
    }

    /// Summary line followed by one line per kept witness. Elapsed time is
    /// left out so that equal runs produce equal text.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "verify level={} matrices={} rows={} coverage={} failures={} {}\n",
            self.level,
            self.matrices_checked,
            self.rows_checked,
            self.coverage_mode,
            self.failure_count,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for failure in &self.failures {
            let _ = writeln!(out, "{failure}");
        }
        out
    }
}

/// Random access to a family of matrices whose rows fit one word.
pub trait MatrixSource: Sync {
    fn level(&self) -> u32;
    fn count(&self) -> u64;
    /// Writes the row words of matrix `index` into `out` (`m` words).
    fn fill_rows(&self, index: u64, out: &mut [u64]);
}

impl MatrixSource for PartitionBuilder {
    fn level(&self) -> u32 {
        PartitionBuilder::level(self)
    }

    fn count(&self) -> u64 {
        self.family_size()
    }

    fn fill_rows(&self, index: u64, out: &mut [u64]) {
        PartitionBuilder::fill_rows(self, index, out)
    }
}

/// Matrices held in memory, e.g. read back from a file.
#[derive(Debug, Clone)]
pub struct MatrixList {
    level: u32,
    matrices: Vec<HadamardMatrix>,
}

impl MatrixList {
    pub fn new(level: u32, matrices: Vec<HadamardMatrix>) -> Result<Self> {
        if level > FULL_ITERATION_MAX_LEVEL {
            return Err(Error::LevelTooLargeForFullVerification(level));
        }
        let dim = Dimension::new(level)?;
        if let Some(bad) = matrices.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim.len(),
                right: bad.size(),
            });
        }
        Ok(MatrixList { level, matrices })
    }

    pub fn matrices_mut(&mut self) -> &mut Vec<HadamardMatrix> {
        &mut self.matrices
    }
}

impl MatrixSource for MatrixList {
    fn level(&self) -> u32 {
        self.level
    }

    fn count(&self) -> u64 {
        self.matrices.len() as u64
    }

    fn fill_rows(&self, index: u64, out: &mut [u64]) {
        out.copy_from_slice(self.matrices[index as usize].words());
    }
}

#[derive(Default)]
struct ChunkOutcome {
    failures: Vec<Failure>,
    failure_count: u64,
    duplicates: Vec<u64>,
}

impl ChunkOutcome {
    fn push(&mut self, failure: Failure) {
        self.failure_count += 1;
        if self.failures.len() < MAX_WITNESSES {
            self.failures.push(failure);
        }
    }
}

/// Full verification of the constructed level-`n` family.
pub fn verify_partition_full(n: u32) -> Result<VerifyReport> {
    if n > FULL_ITERATION_MAX_LEVEL {
        return Err(Error::LevelTooLargeForFullVerification(n));
    }
    verify_source(&PartitionBuilder::new(n)?)
}

/// Full verification of an arbitrary family (levels up to 5).
pub fn verify_source<S: MatrixSource + ?Sized>(source: &S) -> Result<VerifyReport> {
    let start = Instant::now();
    let level = source.level();
    if level > FULL_ITERATION_MAX_LEVEL {
        return Err(Error::LevelTooLargeForFullVerification(level));
    }
    let dim = Dimension::new(level)?;
    let m = dim.len();
    let mask = dim.last_word_mask();
    let bitmap = CoverageBitmap::new(dim)?;
    let count = source.count();
    let chunks = count.div_ceil(CHUNK);

    let outcomes: Vec<ChunkOutcome> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut outcome = ChunkOutcome::default();
            let mut rows = vec![0u64; m];
            let end = ((chunk + 1) * CHUNK).min(count);
            for matrix in chunk * CHUNK..end {
                source.fill_rows(matrix, &mut rows);
                if let Some(pair) = first_bad_pair_words(&rows) {
                    outcome.push(Failure::NotHadamard { matrix, rows: pair });
                }
                for (row, &bits) in rows.iter().enumerate() {
                    let canonical = if bits & 1 == 0 {
                        bits
                    } else {
                        outcome.push(Failure::NonCanonicalRow { matrix, row });
                        !bits & mask
                    };
                    if !bitmap.mark_index(canonical >> 1) {
                        outcome.duplicates.push(canonical >> 1);
                    }
                }
            }
            outcome
        })
        .collect();

    let mut report = VerifyReport::new(level, CoverageMode::Full);
    report.matrices_checked = count;
    report.rows_checked = count * m as u64;
    let mut duplicates = BTreeSet::new();
    for outcome in outcomes {
        report.failure_count += outcome.failure_count;
        let room = MAX_WITNESSES.saturating_sub(report.failures.len());
        report
            .failures
            .extend(outcome.failures.into_iter().take(room));
        duplicates.extend(outcome.duplicates);
    }

    if !duplicates.is_empty() {
        for failure in replay_duplicates(source, &duplicates, mask) {
            report.push_failure(failure);
        }
    }
    for index in bitmap.missing() {
        report.push_failure(Failure::Missing {
            vector: HadamardVector::from_words_unchecked(dim, &[index << 1]),
        });
    }
    let expected = exponent(level);
    if count != 1 << expected {
        report.push_failure(Failure::CountMismatch {
            exponent: expected,
            found: count,
        });
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Sequential pass listing every position of each duplicated class.
fn replay_duplicates<S: MatrixSource + ?Sized>(
    source: &S,
    duplicates: &BTreeSet<u64>,
    mask: u64,
) -> Vec<Failure> {
    let dim = Dimension::new(source.level()).expect("level checked");
    let mut rows = vec![0u64; dim.len()];
    let mut at: std::collections::BTreeMap<u64, Vec<(u64, usize)>> =
        duplicates.iter().map(|&d| (d, Vec::new())).collect();
    for matrix in 0..source.count() {
        source.fill_rows(matrix, &mut rows);
        for (row, &bits) in rows.iter().enumerate() {
            let canonical = if bits & 1 == 0 { bits } else { !bits & mask };
            if let Some(list) = at.get_mut(&(canonical >> 1)) {
                list.push((matrix, row));
            }
        }
    }
    at.into_iter()
        .map(|(index, at)| Failure::Duplicate {
            vector: HadamardVector::from_words_unchecked(dim, &[index << 1]),
            at,
        })
        .collect()
}

/// The `(flat, row)` pairs a sampled run checks, in order.
pub fn sample_plan(n: u32, samples: u64, seed: u64) -> Result<Vec<(u64, usize)>> {
    let size = family_size(n)?;
    let m = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if samples >= size {
        return Ok((0..size).map(|flat| (flat, rng.gen_range(0..m))).collect());
    }
    let mut seen = HashSet::with_capacity(samples as usize);
    let mut plan = Vec::with_capacity(samples as usize);
    while (plan.len() as u64) < samples {
        let flat = rng.gen_range(0..size);
        if seen.insert(flat) {
            plan.push((flat, rng.gen_range(0..m)));
        }
    }
    Ok(plan)
}

/// Checks `samples` seeded random matrices: orthogonality, canonical rows,
/// and that one drawn row locates back to its own position.
pub fn verify_partition_sampled(n: u32, samples: u64, seed: u64) -> Result<VerifyReport> {
    let start = Instant::now();
    if n > FLAT_INDEX_MAX_LEVEL {
        return Err(Error::LevelTooLargeForFlatIndex(n));
    }
    let plan = sample_plan(n, samples, seed)?;
    let builder = PartitionBuilder::new(n)?;
    let dim = builder.dim();
    let m = dim.len();

    let outcomes: Vec<ChunkOutcome> = plan
        .par_chunks(CHUNK as usize)
        .map(|chunk| {
            let mut outcome = ChunkOutcome::default();
            let mut rows = vec![0u64; m];
            for &(matrix, row) in chunk {
                builder.fill_rows(matrix, &mut rows);
                if let Some(pair) = first_bad_pair_words(&rows) {
                    outcome.push(Failure::NotHadamard { matrix, rows: pair });
                }
                for (r, &bits) in rows.iter().enumerate() {
                    if bits & 1 != 0 {
                        outcome.push(Failure::NonCanonicalRow { matrix, row: r });
                    }
                }
                let v = HadamardVector::from_words_unchecked(dim, &[rows[row]]);
                let loc = locate_vector(&v).expect("level within locate range");
                let flat = loc.addr.encode().expect("flat level");
                if flat != matrix || loc.row != row || loc.sign != Sign::Plus {
                    outcome.push(Failure::LocateMismatch {
                        matrix,
                        row,
                        located: format!("{}:{}:{}", loc.addr, loc.row, loc.sign),
                    });
                }
            }
            outcome
        })
        .collect();

    let mut report = VerifyReport::new(n, CoverageMode::Sampled);
    report.matrices_checked = plan.len() as u64;
    report.rows_checked = plan.len() as u64 * m as u64;
    for outcome in outcomes {
        report.failure_count += outcome.failure_count;
        let room = MAX_WITNESSES.saturating_sub(report.failures.len());
        report
            .failures
            .extend(outcome.failures.into_iter().take(room));
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Outcome of rebuilding a family from a different anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossCheck {
    /// Both families agree as sets of row sets.
    pub equal: bool,
    pub all_hadamard: bool,
    pub all_canonical: bool,
}

/// Rebuilds level `n` from the 2×2 anchor `[++; +-]` and compares with the
/// shipped level-2-anchored family as unordered sets of row sets.
pub fn oracle_cross_check(n: u32) -> Result<bool> {
    let anchor = HadamardMatrix::from_strs(&["++", "+-"])?;
    Ok(cross_check_with_anchor(n, &anchor)?.equal)
}

/// Like [`oracle_cross_check`] with a caller-chosen one-matrix anchor
/// family, for levels up to 4.
pub fn cross_check_with_anchor(n: u32, anchor: &HadamardMatrix) -> Result<CrossCheck> {
    let base = anchor.dim().level();
    if n < base || n > 4 {
        return Err(Error::LevelOutOfRange {
            level: n,
            min: base,
            max: 4,
        });
    }
    let mut family = vec![anchor.clone()];
    for _ in base..n {
        let m = family[0].size() as u64;
        let mut next = Vec::with_capacity(family.len() * family.len() * m as usize);
        for ai in &family {
            for aj in &family {
                for k in 0..m {
                    next.push(double_matrix(&pair_matrices(ai, aj, k)?)?);
                }
            }
        }
        family = next;
    }
    let all_hadamard = family.iter().all(is_hadamard);
    let all_canonical = family.iter().all(|m| m.rows().all(|r| r.is_canonical()));
    let alternative = as_row_sets(family.iter());
    let shipped: Vec<HadamardMatrix> = iter_partition(n)?.collect();
    Ok(CrossCheck {
        equal: alternative == as_row_sets(shipped.iter()),
        all_hadamard,
        all_canonical,
    })
}

fn as_row_sets<'a>(
    family: impl Iterator<Item = &'a HadamardMatrix>,
) -> BTreeSet<BTreeSet<HadamardVector>> {
    family.map(|m| m.rows().collect()).collect()
}
