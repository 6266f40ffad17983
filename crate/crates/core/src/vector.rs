//! Bit-packed ±1 vectors.
//!
//! Coordinate `t` lives in bit `t % 64` of word `t / 64`; a set bit means the
//! coordinate is −1, a clear bit means +1. Words are little-endian in the
//! sense that word 0 holds coordinates 0..64. Bits above the last coordinate
//! are always zero.
//!
//! Every vector has a negation with the same "direction", so the sign classes
//! `{x, −x}` are the objects the partition works with. The representative of
//! a class is the member whose coordinate 0 is +1, i.e. whose bit 0 is clear.

use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest supported level; a single matrix at this level is 2^24 bits.
pub const MAX_LEVEL: u32 = 12;

/// Largest vector length for which [`enumerate_canonical`] will stream.
pub const ENUMERATION_MAX_LEN: usize = 32;

const WORD_BITS: usize = 64;

/// Ambient dimension `m = 2^n`, stored as the level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension {
    level: u32,
}

#[allow(clippy::len_without_is_empty)]
impl Dimension {
    pub fn new(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelTooLarge {
                level,
                max: MAX_LEVEL,
            });
        }
        Ok(Dimension { level })
    }

    /// Dimension whose vectors have `m` coordinates.
    pub fn from_len(m: usize) -> Result<Self> {
        if !m.is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength(m));
        }
        Dimension::new(m.trailing_zeros())
    }

    pub const fn level(self) -> u32 {
        self.level
    }

    /// Number of coordinates.
    pub const fn len(self) -> usize {
        1 << self.level
    }

    /// Number of 64-bit words in the packed form.
    pub const fn words(self) -> usize {
        self.len().div_ceil(WORD_BITS)
    }

    /// Dimension with twice as many coordinates.
    pub fn doubled(self) -> Result<Self> {
        Dimension::new(self.level + 1)
    }

    /// Mask of the valid bits in the last word.
    pub(crate) const fn last_word_mask(self) -> u64 {
        let m = self.len();
        if m >= WORD_BITS {
            u64::MAX
        } else {
            (1u64 << m) - 1
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.len())
    }
}

/// A sign, +1 or −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub const fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A vector of ±1 coordinates of length `2^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HadamardVector {
    dim: Dimension,
    words: SmallVec<[u64; 1]>,
}

impl HadamardVector {
    /// The all-ones vector.
    pub fn ones(dim: Dimension) -> Self {
        HadamardVector {
            dim,
            words: SmallVec::from_elem(0, dim.words()),
        }
    }

    /// Builds a vector from packed words, rejecting set padding bits.
    pub fn from_words(dim: Dimension, words: &[u64]) -> Result<Self> {
        if words.len() != dim.words() {
            return Err(Error::DimensionMismatch {
                left: dim.len(),
                right: words.len() * WORD_BITS,
            });
        }
        let last = words.len() - 1;
        if words[last] & !dim.last_word_mask() != 0 {
            return Err(Error::PaddingNotClear {
                word: last,
                m: dim.len(),
            });
        }
        Ok(HadamardVector {
            dim,
            words: SmallVec::from_slice(words),
        })
    }

    /// Single-word constructor for `m <= 64`.
    pub fn from_bits(dim: Dimension, bits: u64) -> Result<Self> {
        Self::from_words(dim, &[bits])
    }

    pub(crate) fn from_words_unchecked(dim: Dimension, words: &[u64]) -> Self {
        debug_assert_eq!(words.len(), dim.words());
        debug_assert_eq!(words[words.len() - 1] & !dim.last_word_mask(), 0);
        HadamardVector {
            dim,
            words: SmallVec::from_slice(words),
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dim.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The packed bits when the vector fits in one word.
    pub fn bits(&self) -> Option<u64> {
        match self.words.as_slice() {
            [w] => Some(*w),
            _ => None,
        }
    }

    /// Coordinate `t` as +1 or −1.
    pub fn coordinate(&self, t: usize) -> i8 {
        assert!(t < self.len(), "coordinate {t} out of range");
        if self.words[t / WORD_BITS] >> (t % WORD_BITS) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn coordinates(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len()).map(|t| self.coordinate(t))
    }

    pub fn is_canonical(&self) -> bool {
        self.words[0] & 1 == 0
    }

    pub fn canonicalize(&self) -> (CanonicalVector, Sign) {
        canonicalize(self)
    }

    /// Concatenation `(self, tail)`, of twice the dimension.
    pub fn concat(&self, tail: &HadamardVector) -> Result<HadamardVector> {
        if self.dim != tail.dim {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: tail.len(),
            });
        }
        let dim = self.dim.doubled()?;
        let m = self.len();
        let words = if m >= WORD_BITS {
            self.words
                .iter()
                .chain(tail.words.iter())
                .copied()
                .collect()
        } else {
            SmallVec::from_elem(self.words[0] | tail.words[0] << m, 1)
        };
        Ok(HadamardVector { dim, words })
    }

    /// Left and right halves. Panics on one-coordinate vectors.
    pub fn halves(&self) -> (HadamardVector, HadamardVector) {
        assert!(self.dim.level > 0, "a one-coordinate vector has no halves");
        let half = Dimension {
            level: self.dim.level - 1,
        };
        let h = half.len();
        if h >= WORD_BITS {
            let w = half.words();
            (
                HadamardVector::from_words_unchecked(half, &self.words[..w]),
                HadamardVector::from_words_unchecked(half, &self.words[w..]),
            )
        } else {
            let mask = half.last_word_mask();
            let bits = self.words[0];
            (
                HadamardVector::from_words_unchecked(half, &[bits & mask]),
                HadamardVector::from_words_unchecked(half, &[(bits >> h) & mask]),
            )
        }
    }

    /// Little-endian serialization, 8 bytes per word.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }
}

impl Neg for &HadamardVector {
    type Output = HadamardVector;

    fn neg(self) -> HadamardVector {
        let last = self.words.len() - 1;
        let mut words = self.words.clone();
        for w in words.iter_mut() {
            *w = !*w;
        }
        words[last] &= self.dim.last_word_mask();
        HadamardVector {
            dim: self.dim,
            words,
        }
    }
}

impl Neg for HadamardVector {
    type Output = HadamardVector;

    fn neg(self) -> HadamardVector {
        -&self
    }
}

impl fmt::Display for HadamardVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_vector(self))
    }
}

impl fmt::Debug for HadamardVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HadamardVector({})", format_vector(self))
    }
}

impl FromStr for HadamardVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_vector(s)
    }
}

/// Representative of a sign class: coordinate 0 is +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalVector(HadamardVector);

impl CanonicalVector {
    /// Wraps `v` if its coordinate 0 is +1.
    pub fn new(v: HadamardVector) -> Option<Self> {
        v.is_canonical().then_some(CanonicalVector(v))
    }

    pub fn as_vector(&self) -> &HadamardVector {
        &self.0
    }

    pub fn into_vector(self) -> HadamardVector {
        self.0
    }

    /// Position among the `2^(m-1)` canonical vectors of this dimension, for
    /// `m <= 64`: the bit pattern shifted right by one.
    pub fn index(&self) -> Option<u64> {
        self.0.bits().map(|b| b >> 1)
    }
}

impl fmt::Display for CanonicalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn parse_vector(text: &str) -> Result<HadamardVector> {
    let m = text.chars().count();
    let dim = Dimension::from_len(m)?;
    let mut words: SmallVec<[u64; 1]> = SmallVec::from_elem(0, dim.words());
    for (t, c) in text.chars().enumerate() {
        match c {
            '+' => {}
            '-' => words[t / WORD_BITS] |= 1 << (t % WORD_BITS),
            found => return Err(Error::IllegalCharacter { position: t, found }),
        }
    }
    Ok(HadamardVector { dim, words })
}

pub fn format_vector(v: &HadamardVector) -> String {
    v.coordinates()
        .map(|c| if c > 0 { '+' } else { '-' })
        .collect()
}

/// Picks the class representative, reporting which sign was applied.
pub fn canonicalize(v: &HadamardVector) -> (CanonicalVector, Sign) {
    if v.is_canonical() {
        (CanonicalVector(v.clone()), Sign::Plus)
    } else {
        (CanonicalVector(-v), Sign::Minus)
    }
}

/// `Σ x_t·y_t`, computed as `m − 2·popcount(x XOR y)`.
pub fn inner_product(x: &HadamardVector, y: &HadamardVector) -> Result<i64> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let differing: u32 = x
        .words
        .iter()
        .zip(&y.words)
        .map(|(a, b)| (a ^ b).count_ones())
        .sum();
    Ok(x.len() as i64 - 2 * i64::from(differing))
}

/// Streams the `2^(m-1)` canonical vectors of `dim` in increasing bit order.
pub fn enumerate_canonical(dim: Dimension) -> Result<CanonicalIter> {
    if dim.len() > ENUMERATION_MAX_LEN {
        return Err(Error::DimensionTooLarge {
            m: dim.len(),
            max: ENUMERATION_MAX_LEN,
        });
    }
    Ok(CanonicalIter {
        dim,
        next: 0,
        end: 1 << (dim.len() - 1),
    })
}

#[derive(Debug, Clone)]
pub struct CanonicalIter {
    dim: Dimension,
    next: u64,
    end: u64,
}

impl Iterator for CanonicalIter {
    type Item = CanonicalVector;

    fn next(&mut self) -> Option<CanonicalVector> {
        if self.next == self.end {
            return None;
        }
        let bits = self.next << 1;
        self.next += 1;
        Some(CanonicalVector(HadamardVector::from_words_unchecked(
            self.dim,
            &[bits],
        )))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for CanonicalIter {}
