//! Partitioning the distinct Hadamard vectors of length `2^n` into Hadamard
//! matrices.
//!
//! Up to sign there are `2^(m−1)` vectors with ±1 entries in dimension
//! `m = 2^n`. This crate builds, addresses and verifies a family of
//! `2^(2^n − n − 1)` Hadamard matrices whose rows hit every one of those sign
//! classes exactly once.
//!
//! - [`vector`]: bit-packed ±1 vectors, canonical signs, popcount inner products.
//! - [`construction`]: the recursive doubling construction and fast generator.
//! - [`address`]: hierarchical and flat indices of matrices in a family.
//! - [`locate`]: the inverse map from a vector to its matrix and row.
//! - [`verify`]: exhaustive and sampled checks of the partition property.
//! - [`feasibility`]: which dimensions admit such a partition at all.
//! - [`io`]: text and packed partition files, PBM export.

pub mod address;
pub mod construction;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod locate;
pub mod matrix;
pub mod vector;
pub mod verify;

pub use address::{
    count_exponent, decode_address, family_size, parse_address, PairAddress, PartitionAddress,
    FLAT_INDEX_MAX_LEVEL,
};
pub use construction::{
    base_partition, double_matrix, iter_partition, iter_partition_range, matrix_by_address,
    matrix_by_flat, pair_matrices, shift_matrix, HalfPair, PartitionBuilder, PartitionIter,
    FULL_ITERATION_MAX_LEVEL,
};
pub use error::{Error, Result};
pub use feasibility::{partition_feasible, FeasibilityVerdict, OrthogonalityBound, Reason};
pub use locate::{locate_vector, Location};
pub use matrix::HadamardMatrix;
pub use vector::{
    canonicalize, enumerate_canonical, format_vector, inner_product, parse_vector, CanonicalVector,
    Dimension, HadamardVector, Sign, MAX_LEVEL,
};
pub use verify::{
    is_hadamard, oracle_cross_check, verify_partition_full, verify_partition_sampled,
    verify_source, CoverageBitmap, CoverageMode, Failure, MatrixList, MatrixSource, VerifyReport,
};
