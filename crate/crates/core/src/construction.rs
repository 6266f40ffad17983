//! Recursive construction of the partition.
//!
//! Level 2 is the fixed pair of 4×4 matrices `A`, `B`. A level `n + 1`
//! matrix is built from level-`n` matrices `Ai`, `Aj` and a shift `k`: the
//! half pair `[Ai | T^k Aj]` is doubled into the rows of
//!
//! ```text
//! [ Ai   T^k Aj ]
//! [ Ai  −T^k Aj ]
//! ```
//!
//! where `T` moves every row down one place and the last row to the top.
//!
//! The doubled rows are interleaved: row `2r` is `(L_r, R_r)` and row
//! `2r + 1` is `(L_r, −R_r)`. With this order the same recursion started
//! from `[++; +-]` yields `A` and `B` row for row, so both anchors give one
//! and the same family at every level.

use std::ops::Range;

use crate::address::{
    decode_address, exponent, family_size, split_flat, PartitionAddress, FLAT_INDEX_MAX_LEVEL,
};
use crate::error::{Error, Result};
use crate::matrix::HadamardMatrix;
use crate::vector::Dimension;

/// Highest level whose full family [`iter_partition`] will stream.
pub const FULL_ITERATION_MAX_LEVEL: u32 = 5;

/// Highest level whose complete family is kept in memory while iterating
/// (2048 matrices of 16 rows).
const CACHE_MAX_LEVEL: u32 = 4;

const BASE_A: [&str; 4] = ["++++", "++--", "+-+-", "+--+"];
const BASE_B: [&str; 4] = ["+++-", "++-+", "+-++", "+---"];

/// The two level-2 matrices, `A` then `B`, rows in their fixed order.
pub fn base_partition() -> [HadamardMatrix; 2] {
    [
        HadamardMatrix::from_strs(&BASE_A).expect("valid base matrix"),
        HadamardMatrix::from_strs(&BASE_B).expect("valid base matrix"),
    ]
}

/// Families at levels 0 through 2.
fn base_family(level: u32) -> Vec<HadamardMatrix> {
    match level {
        0 => vec![HadamardMatrix::from_strs(&["+"]).expect("valid")],
        1 => vec![HadamardMatrix::from_strs(&["++", "+-"]).expect("valid")],
        2 => base_partition().to_vec(),
        _ => unreachable!("no base family at level {level}"),
    }
}

/// `T^k M`: row `r` of the result is row `(r − k) mod m` of `M`.
pub fn shift_matrix(matrix: &HadamardMatrix, k: u64) -> Result<HadamardMatrix> {
    let m = matrix.size();
    if k >= m as u64 {
        return Err(Error::ShiftOutOfRange {
            shift: k,
            modulus: m as u64,
        });
    }
    let k = k as usize;
    let mut words = Vec::with_capacity(matrix.words().len());
    for r in 0..m {
        words.extend_from_slice(matrix.row_words((r + m - k) % m));
    }
    Ok(HadamardMatrix::from_words_unchecked(matrix.dim(), words))
}

/// Two same-size matrices read side by side as one `m × 2m` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfPair {
    left: HadamardMatrix,
    right: HadamardMatrix,
}

impl HalfPair {
    pub fn new(left: HadamardMatrix, right: HadamardMatrix) -> Result<Self> {
        if left.dim() != right.dim() {
            return Err(Error::DimensionMismatch {
                left: left.size(),
                right: right.size(),
            });
        }
        Ok(HalfPair { left, right })
    }

    pub fn left(&self) -> &HadamardMatrix {
        &self.left
    }

    pub fn right(&self) -> &HadamardMatrix {
        &self.right
    }
}

/// `[Ai | T^k Aj]`.
pub fn pair_matrices(ai: &HadamardMatrix, aj: &HadamardMatrix, k: u64) -> Result<HalfPair> {
    if ai.dim() != aj.dim() {
        return Err(Error::DimensionMismatch {
            left: ai.size(),
            right: aj.size(),
        });
    }
    HalfPair::new(ai.clone(), shift_matrix(aj, k)?)
}

/// Rows of `[L R; L −R]` for the half pair `[L | R]`, interleaved:
/// row `2r` is `(L_r, R_r)`, row `2r + 1` is `(L_r, −R_r)`.
pub fn double_matrix(pair: &HalfPair) -> Result<HadamardMatrix> {
    let half = pair.left.dim();
    let dim = half.doubled()?;
    let m = half.len();
    let mut words = Vec::with_capacity(2 * m * dim.words());
    for r in 0..m {
        for negate in [false, true] {
            push_concat(
                half,
                pair.left.row_words(r),
                pair.right.row_words(r),
                negate,
                &mut words,
            );
        }
    }
    Ok(HadamardMatrix::from_words_unchecked(dim, words))
}

/// Appends the packed concatenation `(left, ±right)` of two `half` vectors.
fn push_concat(half: Dimension, left: &[u64], right: &[u64], negate: bool, out: &mut Vec<u64>) {
    let h = half.len();
    if h >= 64 {
        out.extend_from_slice(left);
        if negate {
            out.extend(right.iter().map(|w| !w));
        } else {
            out.extend_from_slice(right);
        }
    } else {
        let mask = half.last_word_mask();
        let tail = if negate { right[0] ^ mask } else { right[0] };
        out.push(left[0] | tail << h);
    }
}

/// Builds the matrix at `addr` by walking the address tree.
pub fn matrix_by_address(addr: &PartitionAddress) -> Result<HadamardMatrix> {
    match addr {
        PartitionAddress::Base { level, index } => {
            let family = base_family(*level);
            family
                .into_iter()
                .nth(usize::from(*index))
                .ok_or_else(|| Error::InvalidAddress(format!("base index {index}")))
        }
        PartitionAddress::Pair(p) => {
            let left = matrix_by_address(p.left())?;
            let right = matrix_by_address(p.right())?;
            double_matrix(&pair_matrices(&left, &right, p.shift())?)
        }
    }
}

/// Single-word generator for levels up to 6.
///
/// Keeps the complete family of one low level (at most level 4) and builds
/// higher-level matrices from it directly on row words, one `u64` per row.
#[derive(Debug, Clone)]
pub struct PartitionBuilder {
    level: u32,
    cache_level: u32,
    cache: Vec<u64>,
}

impl PartitionBuilder {
    pub fn new(level: u32) -> Result<Self> {
        if level > FLAT_INDEX_MAX_LEVEL {
            return Err(Error::LevelTooLargeForFlatIndex(level));
        }
        let cache_level = if level <= 2 {
            level
        } else {
            (level - 1).min(CACHE_MAX_LEVEL)
        };
        let start = cache_level.min(2);
        let mut cache: Vec<u64> = base_family(start)
            .iter()
            .flat_map(|m| m.words().to_vec())
            .collect();
        for l in start + 1..=cache_level {
            let h = 1usize << (l - 1);
            let count = 1usize << exponent(l);
            let mut next = vec![0u64; count << l];
            for (flat, out) in next.chunks_exact_mut(2 * h).enumerate() {
                let (i, j, k) = split_flat(l, flat as u64);
                let left = &cache[i as usize * h..][..h];
                let right = &cache[j as usize * h..][..h];
                double_rows(left, right, k as usize, out);
            }
            cache = next;
        }
        Ok(PartitionBuilder {
            level,
            cache_level,
            cache,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> Dimension {
        Dimension::new(self.level).expect("level checked at construction")
    }

    /// Number of matrices in the family.
    pub fn family_size(&self) -> u64 {
        1 << exponent(self.level)
    }

    /// Writes the `m` row words of matrix `flat` into `out`.
    ///
    /// Panics if `flat` is out of range or `out` is not `m` words long.
    pub fn fill_rows(&self, flat: u64, out: &mut [u64]) {
        assert!(flat < self.family_size(), "flat index {flat} out of range");
        assert_eq!(out.len(), 1 << self.level);
        self.fill_at(self.level, flat, out);
    }

    fn fill_at(&self, level: u32, flat: u64, out: &mut [u64]) {
        if level == self.cache_level {
            let m = out.len();
            out.copy_from_slice(&self.cache[flat as usize * m..][..m]);
            return;
        }
        let h = 1usize << (level - 1);
        let (i, j, k) = split_flat(level, flat);
        let mut left = [0u64; 32];
        let mut right = [0u64; 32];
        self.fill_at(level - 1, i, &mut left[..h]);
        self.fill_at(level - 1, j, &mut right[..h]);
        double_rows(&left[..h], &right[..h], k as usize, out);
    }

    pub fn matrix(&self, flat: u64) -> Result<HadamardMatrix> {
        if flat >= self.family_size() {
            return Err(Error::IndexOutOfRange {
                level: self.level,
                index: flat,
                exponent: exponent(self.level),
            });
        }
        let mut words = vec![0u64; 1 << self.level];
        self.fill_rows(flat, &mut words);
        Ok(HadamardMatrix::from_words_unchecked(self.dim(), words))
    }
}

/// Doubles `[left | T^k right]` on single-word rows of `h <= 32` bits.
#[inline]
fn double_rows(left: &[u64], right: &[u64], k: usize, out: &mut [u64]) {
    let h = left.len();
    let mask = (1u64 << h) - 1;
    for (r, pair) in out.chunks_exact_mut(2).enumerate() {
        let tail = right[(r + h - k) & (h - 1)];
        pair[0] = left[r] | tail << h;
        pair[1] = left[r] | (tail ^ mask) << h;
    }
}

/// Streams the whole level-`n` family in flat-index order (`n <= 5`).
pub fn iter_partition(n: u32) -> Result<PartitionIter> {
    if n > FULL_ITERATION_MAX_LEVEL {
        return Err(Error::LevelTooLargeForFullIteration(n));
    }
    let size = family_size(n)?;
    iter_partition_range(n, 0..size)
}

/// Streams the matrices with flat indices in `range` (`n <= 6`).
pub fn iter_partition_range(n: u32, range: Range<u64>) -> Result<PartitionIter> {
    let size = family_size(n)?;
    if range.start > range.end || range.end > size {
        return Err(Error::IndexOutOfRange {
            level: n,
            index: range.end.max(range.start),
            exponent: exponent(n),
        });
    }
    Ok(PartitionIter {
        builder: PartitionBuilder::new(n)?,
        next: range.start,
        end: range.end,
    })
}

#[derive(Debug, Clone)]
pub struct PartitionIter {
    builder: PartitionBuilder,
    next: u64,
    end: u64,
}

impl PartitionIter {
    /// Flat index of the next matrix to be yielded.
    pub fn position(&self) -> u64 {
        self.next
    }
}

impl Iterator for PartitionIter {
    type Item = HadamardMatrix;

    fn next(&mut self) -> Option<HadamardMatrix> {
        if self.next >= self.end {
            return None;
        }
        let m = self.builder.matrix(self.next).ok();
        self.next += 1;
        m
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = usize::try_from(self.end - self.next).unwrap_or(usize::MAX);
        (left, usize::try_from(self.end - self.next).ok())
    }
}

/// Generic matrix at a flat index, via the address tree.
pub fn matrix_by_flat(level: u32, flat: u64) -> Result<HadamardMatrix> {
    matrix_by_address(&decode_address(level, flat)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{enumerate_canonical, inner_product};
    use std::collections::BTreeSet;

    fn strs(m: &HadamardMatrix) -> Vec<String> {
        m.rows().map(|r| r.to_string()).collect()
    }

    fn row_set(m: &HadamardMatrix) -> BTreeSet<String> {
        m.rows().map(|r| r.to_string()).collect()
    }

    #[test]
    fn base_rows() {
        let [a, b] = base_partition();
        assert_eq!(a.row(0).to_string(), "++++");
        assert_eq!(b.row(2).to_string(), "+-++");
        assert_eq!(strs(&a), BASE_A);
        assert_eq!(strs(&b), BASE_B);
    }

    #[test]
    fn base_rows_cover_dimension_four() {
        let [a, b] = base_partition();
        let mut rows: BTreeSet<String> = row_set(&a);
        rows.extend(row_set(&b));
        let all: BTreeSet<String> = enumerate_canonical(Dimension::new(2).unwrap())
            .unwrap()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(rows, all);
    }

    #[test]
    fn shift_examples() {
        let [a, _] = base_partition();
        assert_eq!(shift_matrix(&a, 0).unwrap(), a);
        assert_eq!(
            strs(&shift_matrix(&a, 1).unwrap()),
            ["+--+", "++++", "++--", "+-+-"]
        );
        assert!(matches!(
            shift_matrix(&a, 4),
            Err(Error::ShiftOutOfRange {
                shift: 4,
                modulus: 4
            })
        ));
        // T^4 = T^0
        let mut m = a.clone();
        for _ in 0..4 {
            m = shift_matrix(&m, 1).unwrap();
        }
        assert_eq!(m, a);
    }

    #[test]
    fn pair_examples() {
        let [a, b] = base_partition();
        assert_eq!(pair_matrices(&a, &a, 0).unwrap().right(), &a);
        let p = pair_matrices(&a, &b, 1).unwrap();
        assert_eq!(p.left().row(0).to_string(), "++++");
        assert_eq!(p.right().row(0).to_string(), "+---");
        for k in 0..4 {
            let right = pair_matrices(&a, &b, k).unwrap().right().clone();
            for r in 0..4 {
                for s in r + 1..4 {
                    assert_eq!(inner_product(&right.row(r), &right.row(s)).unwrap(), 0);
                }
            }
        }
        let two = HadamardMatrix::from_strs(&["++", "+-"]).unwrap();
        assert!(matches!(
            pair_matrices(&a, &two, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn doubling_the_two_by_two() {
        let h2 = HadamardMatrix::from_strs(&["++", "+-"]).unwrap();
        let [a, b] = base_partition();
        let d0 = double_matrix(&pair_matrices(&h2, &h2, 0).unwrap()).unwrap();
        assert_eq!(row_set(&d0), row_set(&a));
        assert_eq!(d0, a);
        let d1 = double_matrix(&pair_matrices(&h2, &h2, 1).unwrap()).unwrap();
        assert_eq!(row_set(&d1), row_set(&b));
        assert_eq!(d1, b);
    }

    #[test]
    fn level_three_first_matrix() {
        let [a, _] = base_partition();
        let m = matrix_by_flat(3, 0).unwrap();
        assert_eq!(m.row(0).to_string(), "++++++++");
        for r in 0..4 {
            assert_eq!(m.row(2 * r), a.row(r).concat(&a.row(r)).unwrap());
            assert_eq!(m.row(2 * r + 1), a.row(r).concat(&-a.row(r)).unwrap());
        }
    }

    #[test]
    fn builder_matches_address_walk() {
        for level in 0..=4 {
            let builder = PartitionBuilder::new(level).unwrap();
            for flat in 0..builder.family_size() {
                assert_eq!(
                    builder.matrix(flat).unwrap(),
                    matrix_by_flat(level, flat).unwrap(),
                    "level {level} flat {flat}"
                );
            }
        }
        for level in [5, 6] {
            let builder = PartitionBuilder::new(level).unwrap();
            let size = builder.family_size();
            for flat in [0, 1, size / 3, size / 2 + 7, size - 1] {
                assert_eq!(
                    builder.matrix(flat).unwrap(),
                    matrix_by_flat(level, flat).unwrap()
                );
            }
        }
    }

    #[test]
    fn iteration_counts() {
        let two: Vec<_> = iter_partition(2).unwrap().collect();
        assert_eq!(two, base_partition().to_vec());
        let three: Vec<_> = iter_partition(3).unwrap().collect();
        assert_eq!(three.len(), 16);
        assert_eq!(three.iter().map(|m| m.size()).sum::<usize>(), 128);
        assert!(matches!(
            iter_partition(6),
            Err(Error::LevelTooLargeForFullIteration(6))
        ));
        let tail: Vec<_> = iter_partition_range(2, 1..2).unwrap().collect();
        assert_eq!(tail, vec![base_partition()[1].clone()]);
        assert!(iter_partition_range(2, 1..3).is_err());
    }

    #[test]
    fn multiword_levels() {
        // level 7: 128 columns, two words per row
        let six = decode_address(6, 987_654_321).unwrap();
        let other = decode_address(6, 42).unwrap();
        let addr = PartitionAddress::pair(six.clone(), other.clone(), 5).unwrap();
        let m = matrix_by_address(&addr).unwrap();
        let left = matrix_by_address(&six).unwrap();
        let right = shift_matrix(&matrix_by_address(&other).unwrap(), 5).unwrap();
        assert_eq!(m.size(), 128);
        for r in 0..64 {
            assert_eq!(m.row(2 * r), left.row(r).concat(&right.row(r)).unwrap());
            assert_eq!(
                m.row(2 * r + 1),
                left.row(r).concat(&-right.row(r)).unwrap()
            );
        }
        for r in (0..128).step_by(7) {
            for s in (r + 1..128).step_by(5) {
                assert_eq!(inner_product(&m.row(r), &m.row(s)).unwrap(), 0);
            }
        }
    }
}
