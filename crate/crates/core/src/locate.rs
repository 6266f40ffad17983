//! Inverse of the construction: where does a given vector's sign class live?
//!
//! For a canonical vector `c = (u, w)` at level `n + 1`, the left half `u`
//! is row `r` of some level-`n` matrix `i`. The right half is `±b` with `b`
//! canonical, and `b` is row `r_j` of some matrix `j`. The shift relation
//! `r_j = (r − k) mod m` fixes `k`, and the sign of `w` picks row `2r`
//! (`+`) or `2r + 1` (`−`) of the doubled matrix.

use crate::address::PartitionAddress;
use crate::error::{Error, Result};
use crate::vector::{canonicalize, HadamardVector, Sign, MAX_LEVEL};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Location {
    pub addr: PartitionAddress,
    pub row: usize,
    pub sign: Sign,
}

/// (matrix, row) of each canonical 4-vector, indexed by `bits >> 1`.
const LEVEL_TWO: [(u8, usize); 8] = [
    (0, 0), // ++++
    (1, 2), // +-++
    (1, 1), // ++-+
    (0, 3), // +--+
    (1, 0), // +++-
    (0, 2), // +-+-
    (0, 1), // ++--
    (1, 3), // +---
];

pub fn locate_vector(v: &HadamardVector) -> Result<Location> {
    let level = v.dim().level();
    if level > MAX_LEVEL {
        return Err(Error::UnsupportedDimension(v.len()));
    }
    let (c, sign) = canonicalize(v);
    let (addr, row) = locate_canonical(c.as_vector());
    Ok(Location { addr, row, sign })
}

/// Location of a vector whose coordinate 0 is +1.
fn locate_canonical(c: &HadamardVector) -> (PartitionAddress, usize) {
    let level = c.dim().level();
    match level {
        0 => (PartitionAddress::Base { level, index: 0 }, 0),
        1 => {
            let row = c.bits().expect("single word") as usize >> 1;
            (PartitionAddress::Base { level, index: 0 }, row)
        }
        2 => {
            let (index, row) = LEVEL_TWO[c.bits().expect("single word") as usize >> 1];
            (PartitionAddress::Base { level, index }, row)
        }
        _ => {
            let (u, w) = c.halves();
            let (left, r) = locate_canonical(&u);
            let (b, right_sign) = canonicalize(&w);
            let (right, rj) = locate_canonical(b.as_vector());
            let h = u.len();
            let shift = ((r + h - rj) % h) as u64;
            let row = match right_sign {
                Sign::Plus => 2 * r,
                Sign::Minus => 2 * r + 1,
            };
            let addr = PartitionAddress::pair(left, right, shift)
                .expect("halves share a level and the shift is reduced");
            (addr, row)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::base_partition;
    use crate::vector::parse_vector;

    fn locate(s: &str) -> (String, usize, Sign) {
        let loc = locate_vector(&parse_vector(s).unwrap()).unwrap();
        (loc.addr.to_string(), loc.row, loc.sign)
    }

    #[test]
    fn level_two_table_matches_base() {
        for (index, m) in base_partition().iter().enumerate() {
            for r in 0..4 {
                let slot = m.row(r).bits().unwrap() as usize >> 1;
                assert_eq!(LEVEL_TWO[slot], (index as u8, r));
            }
        }
    }

    #[test]
    fn examples() {
        assert_eq!(locate("++++"), ("0".into(), 0, Sign::Plus));
        assert_eq!(locate("---+"), ("1".into(), 0, Sign::Minus));
        assert_eq!(locate("++++++++"), ("0".into(), 0, Sign::Plus));
        assert_eq!(locate("+"), ("0".into(), 0, Sign::Plus));
        assert_eq!(locate("-"), ("0".into(), 0, Sign::Minus));
        assert_eq!(locate("-+"), ("0".into(), 1, Sign::Minus));
    }
}
