use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),

    #[error("illegal character {found:?} at position {position}, expected '+' or '-'")]
    IllegalCharacter { position: usize, found: char },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {m} exceeds the limit of {max} for this operation")]
    DimensionTooLarge { m: usize, max: usize },

    #[error("level {level} exceeds the supported maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("negative level {0}")]
    NegativeLevel(i64),

    #[error("shift {shift} out of range for {modulus} rows")]
    ShiftOutOfRange { shift: u64, modulus: u64 },

    #[error("matrix has {rows} rows of dimension {m}, expected a square matrix")]
    NotSquare { rows: usize, m: usize },

    #[error("word {word} of a {m}-coordinate vector has bits set above the last coordinate")]
    PaddingNotClear { word: usize, m: usize },

    #[error("flat index {index} out of range for level {level} (family size 2^{exponent})")]
    IndexOutOfRange {
        level: u32,
        index: u64,
        exponent: u64,
    },

    #[error("level {0} has no 64-bit flat index (maximum level 6)")]
    LevelTooLargeForFlatIndex(u32),

    #[error("level {0} is too large to iterate the full family (maximum level 5)")]
    LevelTooLargeForFullIteration(u32),

    #[error("level {0} is too large for full verification (maximum level 5)")]
    LevelTooLargeForFullVerification(u32),

    #[error("level {level} outside the supported range {min}..={max}")]
    LevelOutOfRange { level: u32, min: u32, max: u32 },

    #[error("invalid partition address: {0}")]
    InvalidAddress(String),

    #[error("vectors of length {0} cannot be located (supported lengths are 2^0 through 2^12)")]
    UnsupportedDimension(usize),

    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("bad magic: not a partition file")]
    BadMagic,

    #[error("header declares {found} matrices, level {level} has 2^{exponent}")]
    CountMismatch {
        level: u32,
        exponent: u64,
        found: String,
    },

    #[error("file truncated at byte {offset}")]
    TruncatedFile { offset: u64 },

    #[error("non-zero padding bits in row word at byte {offset}")]
    NonZeroPadding { offset: u64 },

    #[error("unexpected data after the last matrix at byte {offset}")]
    TrailingData { offset: u64 },

    #[error("malformed partition file at line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}
