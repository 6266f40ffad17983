use std::fmt;

use crate::error::{Error, Result};
use crate::vector::{parse_vector, Dimension, HadamardVector};

/// A square ±1 matrix stored as packed rows.
///
/// Matrices built by [`crate::construction`] always have pairwise orthogonal,
/// canonical rows. Matrices assembled from external input are only checked
/// for shape; [`crate::verify::is_hadamard`] decides orthogonality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HadamardMatrix {
    dim: Dimension,
    words: Vec<u64>,
}

impl HadamardMatrix {
    pub fn from_rows(rows: &[HadamardVector]) -> Result<Self> {
        let first = rows.first().ok_or(Error::NotSquare { rows: 0, m: 0 })?;
        let dim = first.dim();
        if rows.len() != dim.len() {
            return Err(Error::NotSquare {
                rows: rows.len(),
                m: dim.len(),
            });
        }
        let mut words = Vec::with_capacity(dim.len() * dim.words());
        for row in rows {
            if row.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim.len(),
                    right: row.len(),
                });
            }
            words.extend_from_slice(row.words());
        }
        Ok(HadamardMatrix { dim, words })
    }

    /// Parses one `+`/`-` string per row.
    pub fn from_strs<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|s| parse_vector(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }

    /// Wraps `m * words` packed row words. Padding must already be clear.
    pub(crate) fn from_words_unchecked(dim: Dimension, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), dim.len() * dim.words());
        HadamardMatrix { dim, words }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Number of rows (and columns).
    pub fn size(&self) -> usize {
        self.dim.len()
    }

    pub fn row(&self, r: usize) -> HadamardVector {
        HadamardVector::from_words_unchecked(self.dim, self.row_words(r))
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        let w = self.dim.words();
        &self.words[r * w..(r + 1) * w]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = HadamardVector> + '_ {
        (0..self.size()).map(|r| self.row(r))
    }

    /// All row words, row after row.
    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for HadamardMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.rows().enumerate() {
            if r > 0 {
                writeln!(f)?;
            }
            write!(f, "{row}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for HadamardMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.rows().map(|r| r.to_string()))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_is_checked() {
        assert!(matches!(
            HadamardMatrix::from_strs(&["++", "+-", "--"]),
            Err(Error::NotSquare { rows: 3, m: 2 })
        ));
        assert!(matches!(
            HadamardMatrix::from_strs(&["++", "+-+-"]),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = HadamardMatrix::from_strs(&["++", "+-"]).unwrap();
        assert_eq!(m.to_string(), "++\n+-");
        assert_eq!(m.row(1).to_string(), "+-");
    }
}
