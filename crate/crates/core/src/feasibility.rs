//! Which dimensions admit a partition at all.
//!
//! A partition of the `2^(m−1)` distinct Hadamard vectors of length `m` into
//! `m × m` Hadamard matrices uses `k` matrices with `k·m = 2^(m−1)`, so `m`
//! must divide `2^(m−1)`. That fails for every `m` with an odd prime factor,
//! leaving only the powers of two, all of which the construction realises.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    /// `m = 2^exponent`.
    PowerOfTwo { exponent: u32 },
    /// `2^(m−1) mod m = residue ≠ 0`.
    DivisibilityFails { residue: u64 },
}

/// Upper bounds on orthogonal sets that explain infeasibility directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthogonalityBound {
    /// Odd `m > 1`: inner products are odd, so no two vectors are orthogonal.
    OddDimension,
    /// `m ≡ 2 (mod 4)`, `m > 2`: at most two mutually orthogonal vectors.
    TwiceOddDimension,
}

impl OrthogonalityBound {
    pub fn max_orthogonal_vectors(self) -> usize {
        match self {
            OrthogonalityBound::OddDimension => 1,
            OrthogonalityBound::TwiceOddDimension => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityVerdict {
    pub m: u64,
    pub feasible: bool,
    pub reason: Reason,
    pub bound: Option<OrthogonalityBound>,
}

pub fn partition_feasible(m: u64) -> Result<FeasibilityVerdict> {
    if m == 0 {
        return Err(Error::ZeroDimension);
    }
    if m.is_power_of_two() {
        return Ok(FeasibilityVerdict {
            m,
            feasible: true,
            reason: Reason::PowerOfTwo {
                exponent: m.trailing_zeros(),
            },
            bound: None,
        });
    }
    let bound = match m % 4 {
        1 | 3 => Some(OrthogonalityBound::OddDimension),
        2 => Some(OrthogonalityBound::TwiceOddDimension),
        _ => None,
    };
    Ok(FeasibilityVerdict {
        m,
        feasible: false,
        reason: Reason::DivisibilityFails {
            residue: pow2_mod(m - 1, m),
        },
        bound,
    })
}

/// `2^exp mod modulus` by square-and-multiply.
fn pow2_mod(mut exp: u64, modulus: u64) -> u64 {
    let modulus = u128::from(modulus);
    let mut base = 2 % modulus;
    let mut acc = 1 % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc as u64
}

impl fmt::Display for FeasibilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            Reason::PowerOfTwo { exponent } => {
                write!(f, "feasible: {} = 2^{}", self.m, exponent)
            }
            Reason::DivisibilityFails { .. } => {
                write!(f, "infeasible: {} does not divide 2^{}", self.m, self.m - 1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let v = partition_feasible(8).unwrap();
        assert!(v.feasible);
        assert_eq!(v.reason, Reason::PowerOfTwo { exponent: 3 });

        let v = partition_feasible(12).unwrap();
        assert!(!v.feasible);
        // 2048 = 170·12 + 8
        assert_eq!(v.reason, Reason::DivisibilityFails { residue: 8 });
        assert_eq!(v.bound, None);
        assert_eq!(v.to_string(), "infeasible: 12 does not divide 2^11");

        let v = partition_feasible(2).unwrap();
        assert!(v.feasible);
        assert_eq!(v.to_string(), "feasible: 2 = 2^1");

        assert!(partition_feasible(1).unwrap().feasible);
        assert!(matches!(partition_feasible(0), Err(Error::ZeroDimension)));
    }

    #[test]
    fn bounds() {
        assert_eq!(
            partition_feasible(7).unwrap().bound,
            Some(OrthogonalityBound::OddDimension)
        );
        assert_eq!(
            partition_feasible(6).unwrap().bound,
            Some(OrthogonalityBound::TwiceOddDimension)
        );
        assert_eq!(partition_feasible(20).unwrap().bound, None);
    }

    #[test]
    fn large_modulus_does_not_overflow() {
        let m = u64::MAX - 58; // odd
        let v = partition_feasible(m).unwrap();
        assert!(!v.feasible);
        let Reason::DivisibilityFails { residue } = v.reason else {
            panic!()
        };
        assert_ne!(residue, 0);
        assert!(residue < m);
    }
}
