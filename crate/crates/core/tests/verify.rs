use std::collections::HashSet;

use hpart::verify::{cross_check_with_anchor, sample_plan};
use hpart::{
    enumerate_canonical, iter_partition, oracle_cross_check, verify_partition_full,
    verify_partition_sampled, verify_source, Dimension, Failure, HadamardMatrix, HadamardVector,
    MatrixList,
};

/// Coverage through a hash set of all rows, compared with the enumeration.
fn hash_set_coverage(level: u32) -> bool {
    let mut rows = HashSet::new();
    let mut total = 0usize;
    for m in iter_partition(level).unwrap() {
        for r in m.rows() {
            rows.insert(r);
            total += 1;
        }
    }
    let all: HashSet<HadamardVector> = enumerate_canonical(Dimension::new(level).unwrap())
        .unwrap()
        .map(|c| c.into_vector())
        .collect();
    total == all.len() && rows == all
}

#[test]
fn bitmap_and_hash_set_agree() {
    for level in 1..=3 {
        let bitmap = verify_partition_full(level).unwrap().passed();
        assert_eq!(bitmap, hash_set_coverage(level));
        assert!(bitmap);
    }
}

#[test]
fn full_level_four() {
    let r = verify_partition_full(4).unwrap();
    assert!(r.passed(), "{}", r.to_text());
    assert_eq!(r.matrices_checked, 2048);
    assert_eq!(r.rows_checked, 32768);
}

fn flip(matrices: &[HadamardMatrix], index: usize, row: usize, bit: usize) -> Vec<HadamardMatrix> {
    let mut out = matrices.to_vec();
    let mut rows: Vec<HadamardVector> = out[index].rows().collect();
    let dim = rows[row].dim();
    let bits = rows[row].bits().unwrap() ^ (1 << bit);
    rows[row] = HadamardVector::from_bits(dim, bits).unwrap();
    out[index] = HadamardMatrix::from_rows(&rows).unwrap();
    out
}

#[test]
fn every_single_bit_flip_is_caught_at_level_three() {
    let matrices: Vec<_> = iter_partition(3).unwrap().collect();
    let mut caught = 0;
    for index in 0..16 {
        for row in 0..8 {
            for bit in 0..8 {
                let tampered = flip(&matrices, index, row, bit);
                let r = verify_source(&MatrixList::new(3, tampered).unwrap()).unwrap();
                assert!(!r.passed(), "flip {index}/{row}/{bit} not detected");
                assert!(r.failures.iter().any(
                    |f| matches!(f, Failure::NotHadamard { matrix, .. } if *matrix == index as u64)
                ));
                caught += 1;
            }
        }
    }
    assert_eq!(caught, 16 * 8 * 8);
}

#[test]
fn report_lines_replay() {
    let matrices: Vec<_> = iter_partition(3).unwrap().collect();
    let tampered = flip(&matrices, 3, 0, 0);
    let r = verify_source(&MatrixList::new(3, tampered.clone()).unwrap()).unwrap();
    let again = verify_source(&MatrixList::new(3, tampered).unwrap()).unwrap();
    assert_eq!(r.to_text(), again.to_text());
    let text = r.to_text();
    assert!(text.starts_with("verify level=3 matrices=16 rows=128 coverage=full failures="));
    assert!(text.contains("non-canonical matrix=3 row=0"));
    assert!(text.contains("not-hadamard matrix=3 rows=0,1"));
}

#[test]
fn sampled_is_reproducible_across_thread_counts() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| verify_partition_sampled(5, 5000, 42).unwrap().to_text())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
    assert_eq!(
        sample_plan(5, 1000, 42).unwrap(),
        sample_plan(5, 1000, 42).unwrap()
    );
    assert_ne!(
        sample_plan(5, 1000, 42).unwrap(),
        sample_plan(5, 1000, 43).unwrap()
    );
}

#[test]
fn sampled_large_levels() {
    let r = verify_partition_sampled(5, 100_000, 42).unwrap();
    assert!(r.passed());
    assert_eq!(r.matrices_checked, 100_000);
    let r = verify_partition_sampled(6, 10_000, 7).unwrap();
    assert!(r.passed());
    assert_eq!(r.rows_checked, 640_000);
}

#[test]
fn cross_construction() {
    assert!(oracle_cross_check(2).unwrap());
    assert!(oracle_cross_check(3).unwrap());
    let bad_anchor = HadamardMatrix::from_strs(&["++", "-+"]).unwrap();
    let c = cross_check_with_anchor(2, &bad_anchor).unwrap();
    assert!(c.all_hadamard && !c.all_canonical && !c.equal);
}
