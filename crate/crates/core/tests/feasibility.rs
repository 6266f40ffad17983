use hpart::{
    partition_feasible, verify_partition_full, verify_partition_sampled, OrthogonalityBound, Reason,
};
use num_bigint::BigUint;

#[test]
fn feasible_exactly_at_powers_of_two() {
    for m in 1..=1024u64 {
        let v = partition_feasible(m).unwrap();
        let power = (0..=10).any(|e| m == 1 << e);
        assert_eq!(v.feasible, power, "m = {m}");
    }
}

#[test]
fn residues_match_big_integer_division() {
    for m in 1..=1024u64 {
        let v = partition_feasible(m).unwrap();
        let exact = (BigUint::from(1u8) << (m - 1) as usize) % BigUint::from(m);
        match v.reason {
            Reason::PowerOfTwo { exponent } => {
                assert_eq!(1u64 << exponent, m);
                assert_eq!(exact, BigUint::from(0u8));
            }
            Reason::DivisibilityFails { residue } => {
                assert_ne!(residue, 0);
                assert_eq!(BigUint::from(residue), exact, "m = {m}");
            }
        }
    }
}

/// Largest set of mutually orthogonal ±1 vectors of length `m`, found by
/// exhaustive search over canonical representatives.
fn max_orthogonal_set(m: usize) -> usize {
    let vectors: Vec<u64> = (0..1u64 << (m - 1)).map(|i| i << 1).collect();
    let orth = |a: u64, b: u64| 2 * (a ^ b).count_ones() as usize == m;
    let mut best = 1;
    fn grow(
        chosen: &mut Vec<u64>,
        start: usize,
        vectors: &[u64],
        orth: &dyn Fn(u64, u64) -> bool,
        best: &mut usize,
    ) {
        *best = (*best).max(chosen.len());
        for (i, &v) in vectors.iter().enumerate().skip(start) {
            if chosen.iter().all(|&c| orth(c, v)) {
                chosen.push(v);
                grow(chosen, i + 1, vectors, orth, best);
                chosen.pop();
            }
        }
    }
    grow(&mut Vec::new(), 0, &vectors, &orth, &mut best);
    best
}

#[test]
fn orthogonality_bounds_by_exhaustive_search() {
    for m in [3usize, 5, 6, 7, 9, 10] {
        let v = partition_feasible(m as u64).unwrap();
        let bound = v.bound.expect("non-multiple of four");
        assert_eq!(
            max_orthogonal_set(m),
            bound.max_orthogonal_vectors(),
            "m = {m}"
        );
    }
    assert_eq!(
        partition_feasible(9).unwrap().bound,
        Some(OrthogonalityBound::OddDimension)
    );
    assert_eq!(partition_feasible(12).unwrap().bound, None);
}

#[test]
fn feasible_dimensions_are_constructed() {
    for n in 0..=5u32 {
        let m = 1u64 << n;
        assert!(partition_feasible(m).unwrap().feasible);
        let report = if n <= 4 {
            verify_partition_full(n).unwrap()
        } else {
            verify_partition_sampled(n, 10_000, 1).unwrap()
        };
        assert!(report.passed(), "{}", report.to_text());
    }
}
