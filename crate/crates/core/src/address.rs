//! Addresses of matrices in the level-`n` family.
//!
//! A matrix at level `n >= 3` is named by the triple `(i, j, k)`: the
//! level-`(n−1)` matrices that form its left and right halves and the cyclic
//! row shift applied to the right one. Levels 0 through 2 are fixed base
//! families of one, one and two matrices.
//!
//! Through level 6 an address packs into one `u64` as the mixed-radix number
//! `(flat(i)·C + flat(j))·2^(n−1) + k` with `C = 2^E(n−1)`. Addresses are
//! ordered lexicographically in `(i, j, k)`, which is also flat-index order.

use std::fmt;

use crate::error::{Error, Result};
use crate::vector::MAX_LEVEL;

/// Highest level with a 64-bit flat index (`E(6) = 57`).
pub const FLAT_INDEX_MAX_LEVEL: u32 = 6;

/// `E(n) = 2^n − n − 1`; the level-`n` family has `2^E(n)` matrices.
pub fn count_exponent(n: i64) -> Result<u64> {
    if n < 0 {
        return Err(Error::NegativeLevel(n));
    }
    if n > 63 {
        return Err(Error::LevelTooLarge {
            level: u32::try_from(n).unwrap_or(u32::MAX),
            max: 63,
        });
    }
    Ok((1u64 << n) - n as u64 - 1)
}

pub(crate) fn exponent(level: u32) -> u64 {
    (1u64 << level) - u64::from(level) - 1
}

/// Family size at a level that has a flat index.
pub fn family_size(level: u32) -> Result<u64> {
    if level > FLAT_INDEX_MAX_LEVEL {
        return Err(Error::LevelTooLargeForFlatIndex(level));
    }
    Ok(1 << exponent(level))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartitionAddress {
    /// One of the hardcoded matrices at levels 0, 1 (index 0) and 2
    /// (index 0 = A, 1 = B).
    Base {
        level: u32,
        index: u8,
    },
    Pair(Box<PairAddress>),
}

/// The `(i, j, k)` triple of a level `>= 3` address.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairAddress {
    left: PartitionAddress,
    right: PartitionAddress,
    shift: u64,
}

impl PairAddress {
    pub fn left(&self) -> &PartitionAddress {
        &self.left
    }

    pub fn right(&self) -> &PartitionAddress {
        &self.right
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }
}

impl PartitionAddress {
    pub fn base(level: u32, index: u8) -> Result<Self> {
        let count = match level {
            0 | 1 => 1,
            2 => 2,
            _ => {
                return Err(Error::InvalidAddress(format!(
                    "level {level} has no base matrices"
                )))
            }
        };
        if index >= count {
            return Err(Error::InvalidAddress(format!(
                "base index {index} at level {level}"
            )));
        }
        Ok(PartitionAddress::Base { level, index })
    }

    /// Address `(left, right, shift)` one level above its halves.
    pub fn pair(left: PartitionAddress, right: PartitionAddress, shift: u64) -> Result<Self> {
        let level = left.level();
        if level != right.level() {
            return Err(Error::InvalidAddress(format!(
                "halves at different levels {} and {}",
                level,
                right.level()
            )));
        }
        if level < 2 {
            return Err(Error::InvalidAddress(format!(
                "pairs start at level 3, halves are at level {level}"
            )));
        }
        if level + 1 > MAX_LEVEL {
            return Err(Error::LevelTooLarge {
                level: level + 1,
                max: MAX_LEVEL,
            });
        }
        let rows = 1u64 << level;
        if shift >= rows {
            return Err(Error::ShiftOutOfRange {
                shift,
                modulus: rows,
            });
        }
        Ok(PartitionAddress::Pair(Box::new(PairAddress {
            left,
            right,
            shift,
        })))
    }

    pub fn level(&self) -> u32 {
        match self {
            PartitionAddress::Base { level, .. } => *level,
            PartitionAddress::Pair(p) => p.left.level() + 1,
        }
    }

    /// Packs the address into its flat index (levels up to 6).
    pub fn encode(&self) -> Result<u64> {
        let level = self.level();
        if level > FLAT_INDEX_MAX_LEVEL {
            return Err(Error::LevelTooLargeForFlatIndex(level));
        }
        Ok(self.encode_unchecked())
    }

    fn encode_unchecked(&self) -> u64 {
        match self {
            PartitionAddress::Base { index, .. } => u64::from(*index),
            PartitionAddress::Pair(p) => {
                let half_level = p.left.level();
                let c = 1u64 << exponent(half_level);
                (p.left.encode_unchecked() * c + p.right.encode_unchecked()) << half_level | p.shift
            }
        }
    }
}

/// Unpacks a flat index into its hierarchical address.
pub fn decode_address(level: u32, flat: u64) -> Result<PartitionAddress> {
    if level > FLAT_INDEX_MAX_LEVEL {
        return Err(Error::LevelTooLargeForFlatIndex(level));
    }
    let e = exponent(level);
    if flat >> e != 0 {
        return Err(Error::IndexOutOfRange {
            level,
            index: flat,
            exponent: e,
        });
    }
    Ok(decode_unchecked(level, flat))
}

fn decode_unchecked(level: u32, flat: u64) -> PartitionAddress {
    if level <= 2 {
        return PartitionAddress::Base {
            level,
            index: flat as u8,
        };
    }
    let half_level = level - 1;
    let shift = flat & ((1 << half_level) - 1);
    let rest = flat >> half_level;
    let c_bits = exponent(half_level);
    let right = rest & ((1 << c_bits) - 1);
    let left = rest >> c_bits;
    PartitionAddress::Pair(Box::new(PairAddress {
        left: decode_unchecked(half_level, left),
        right: decode_unchecked(half_level, right),
        shift,
    }))
}

/// Splits a flat index at `level >= 3` into `(flat(i), flat(j), k)`.
pub(crate) fn split_flat(level: u32, flat: u64) -> (u64, u64, u64) {
    let half_level = level - 1;
    let shift = flat & ((1 << half_level) - 1);
    let rest = flat >> half_level;
    let c_bits = exponent(half_level);
    (rest >> c_bits, rest & ((1 << c_bits) - 1), shift)
}

/// Parses an address printed by `Display`: a flat index, or a nested
/// `(i,j,k)` triple whose halves are again addresses.
pub fn parse_address(level: u32, text: &str) -> Result<PartitionAddress> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        if level < 3 {
            return Err(Error::InvalidAddress(format!(
                "level {level} addresses are flat"
            )));
        }
        let parts = split_top_level(inner);
        let [left, right, shift] = parts.as_slice() else {
            return Err(Error::InvalidAddress(format!(
                "expected (i,j,k), got {text}"
            )));
        };
        let shift = shift
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::InvalidAddress(format!("shift {shift:?}: {e}")))?;
        return PartitionAddress::pair(
            parse_address(level - 1, left)?,
            parse_address(level - 1, right)?,
            shift,
        );
    }
    let flat = text
        .parse::<u64>()
        .map_err(|e| Error::InvalidAddress(format!("{text:?}: {e}")))?;
    decode_address(level, flat)
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl fmt::Display for PartitionAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level() <= FLAT_INDEX_MAX_LEVEL {
            return write!(f, "{}", self.encode_unchecked());
        }
        match self {
            PartitionAddress::Base { index, .. } => write!(f, "{index}"),
            PartitionAddress::Pair(p) => write!(f, "({},{},{})", p.left, p.right, p.shift),
        }
    }
}
