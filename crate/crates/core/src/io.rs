//! Partition files and PBM rendering.
//!
//! Text format:
//!
//! ```text
//! HPART n=<n> count=2^<E(n)>[ range=<a>..<b>]
//! <m lines of '+'/'-'>
//!
//! <m lines of '+'/'-'>
//! ```
//!
//! Packed format, all integers little-endian:
//!
//! | bytes | field                                           |
//! |-------|-------------------------------------------------|
//! | 6     | magic `HPART\x01`                               |
//! | 1     | level `n`                                       |
//! | 8     | family size `2^E(n)`                            |
//! | 1     | format: `1` packed, `0x81` packed with a range  |
//! | 16    | only for `0x81`: range start and end (`u64`)    |
//!
//! followed by `m` rows per matrix, each `ceil(m/64)` words with clear
//! padding bits. Matrices appear in flat-index order.

use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Range;

use crate::address::{exponent, family_size, PartitionAddress};
use crate::construction::{iter_partition, iter_partition_range, matrix_by_address};
use crate::error::{Error, Result};
use crate::matrix::HadamardMatrix;
use crate::vector::{parse_vector, Dimension};

pub const MAGIC: &[u8; 6] = b"HPART\x01";
const TEXT_MAGIC: &[u8; 6] = b"HPART ";
const FORMAT_PACKED: u8 = 1;
const FORMAT_PACKED_RANGE: u8 = 0x81;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Packed,
}

/// Writes the level-`n` family, or the flat indices in `range`, to `sink`.
/// Returns the number of matrices written.
pub fn write_partition<W: Write>(
    n: u32,
    format: Format,
    range: Option<Range<u64>>,
    sink: W,
) -> Result<u64> {
    let size = family_size(n)?;
    let range = range.filter(|r| *r != (0..size));
    let matrices = match &range {
        None => iter_partition(n)?,
        Some(r) => iter_partition_range(n, r.clone())?,
    };
    let mut out = BufWriter::new(sink);
    let mut written = 0u64;
    match format {
        Format::Text => {
            write!(out, "HPART n={n} count=2^{}", exponent(n))?;
            if let Some(r) = &range {
                write!(out, " range={}..{}", r.start, r.end)?;
            }
            out.write_all(b"\n")?;
            for matrix in matrices {
                if written > 0 {
                    out.write_all(b"\n")?;
                }
                for row in matrix.rows() {
                    writeln!(out, "{row}")?;
                }
                written += 1;
            }
        }
        Format::Packed => {
            out.write_all(MAGIC)?;
            out.write_all(&[n as u8])?;
            out.write_all(&size.to_le_bytes())?;
            match &range {
                None => out.write_all(&[FORMAT_PACKED])?,
                Some(r) => {
                    out.write_all(&[FORMAT_PACKED_RANGE])?;
                    out.write_all(&r.start.to_le_bytes())?;
                    out.write_all(&r.end.to_le_bytes())?;
                }
            }
            for matrix in matrices {
                for w in matrix.words() {
                    out.write_all(&w.to_le_bytes())?;
                }
                written += 1;
            }
        }
    }
    out.flush()?;
    Ok(written)
}

/// Opens a partition file of either format, reading its header.
pub fn read_partition<R: Read>(source: R) -> Result<PartitionReader<BufReader<R>>> {
    PartitionReader::new(BufReader::new(source))
}

/// Streams `(flat index, matrix)` pairs; stops after the first error.
#[derive(Debug)]
pub struct PartitionReader<R> {
    reader: R,
    format: Format,
    dim: Dimension,
    next: u64,
    end: u64,
    offset: u64,
    line: u64,
    done: bool,
}

impl<R: BufRead> PartitionReader<R> {
    fn new(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        let got = read_up_to(&mut reader, &mut magic)?;
        if got < magic.len() {
            return Err(if magic[..got] == MAGIC[..got] {
                Error::TruncatedFile { offset: got as u64 }
            } else {
                Error::BadMagic
            });
        }
        if &magic == MAGIC {
            Self::packed_header(reader)
        } else if &magic == TEXT_MAGIC {
            Self::text_header(reader)
        } else {
            Err(Error::BadMagic)
        }
    }

    fn packed_header(mut reader: R) -> Result<Self> {
        let mut fixed = [0u8; 10];
        let got = read_up_to(&mut reader, &mut fixed)?;
        if got < fixed.len() {
            return Err(Error::TruncatedFile {
                offset: 6 + got as u64,
            });
        }
        let level = u32::from(fixed[0]);
        let count = u64::from_le_bytes(fixed[1..9].try_into().expect("8 bytes"));
        let size = checked_family_size(level, &count.to_string(), count)?;
        let (range, offset) = match fixed[9] {
            FORMAT_PACKED => (0..size, 16),
            FORMAT_PACKED_RANGE => {
                let mut bounds = [0u8; 16];
                let got = read_up_to(&mut reader, &mut bounds)?;
                if got < bounds.len() {
                    return Err(Error::TruncatedFile {
                        offset: 16 + got as u64,
                    });
                }
                let start = u64::from_le_bytes(bounds[..8].try_into().expect("8 bytes"));
                let end = u64::from_le_bytes(bounds[8..].try_into().expect("8 bytes"));
                (check_range(level, start..end, size)?, 32)
            }
            other => {
                return Err(Error::Malformed {
                    line: 0,
                    message: format!("unknown packed format byte {other:#04x}"),
                })
            }
        };
        Ok(PartitionReader {
            reader,
            format: Format::Packed,
            dim: Dimension::new(level)?,
            next: range.start,
            end: range.end,
            offset,
            line: 0,
            done: false,
        })
    }

    fn text_header(mut reader: R) -> Result<Self> {
        let mut header = String::new();
        let got = reader.read_line(&mut header)?;
        let malformed = |message: String| Error::Malformed { line: 1, message };
        let fields: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
        let (level, count, range) = match fields.as_slice() {
            [n, count] => (*n, *count, None),
            [n, count, range] => (*n, *count, Some(*range)),
            _ => return Err(malformed(format!("bad header {header:?}"))),
        };
        let level: u32 = level
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| malformed(format!("bad level field {level:?}")))?;
        let count = count
            .strip_prefix("count=")
            .ok_or_else(|| malformed(format!("bad count field {count:?}")))?;
        let declared_exponent = count.strip_prefix("2^").and_then(|e| e.parse::<u64>().ok());
        let size = match declared_exponent {
            Some(e) if level <= 6 && e == exponent(level) => family_size(level)?,
            _ => {
                return Err(Error::CountMismatch {
                    level,
                    exponent: if level <= 63 { exponent(level) } else { 0 },
                    found: count.to_string(),
                })
            }
        };
        let range = match range {
            None => 0..size,
            Some(field) => {
                let parsed = field
                    .strip_prefix("range=")
                    .and_then(|r| r.split_once(".."))
                    .and_then(|(a, b)| Some(a.parse().ok()?..b.parse().ok()?))
                    .ok_or_else(|| malformed(format!("bad range field {field:?}")))?;
                check_range(level, parsed, size)?
            }
        };
        Ok(PartitionReader {
            reader,
            format: Format::Text,
            dim: Dimension::new(level)?,
            next: range.start,
            end: range.end,
            offset: 6 + got as u64,
            line: 1,
            done: false,
        })
    }

    pub fn level(&self) -> u32 {
        self.dim.level()
    }

    pub fn format(&self) -> Format {
        self.format
    }

    /// Flat indices the file declares.
    pub fn declared_range(&self) -> Range<u64> {
        self.next..self.end
    }

    fn read_packed(&mut self) -> Result<HadamardMatrix> {
        let m = self.dim.len();
        let per_row = self.dim.words();
        let mut bytes = vec![0u8; m * per_row * 8];
        let got = read_up_to(&mut self.reader, &mut bytes)?;
        if got < bytes.len() {
            return Err(Error::TruncatedFile {
                offset: self.offset + got as u64,
            });
        }
        let mask = self.dim.last_word_mask();
        let mut words = Vec::with_capacity(m * per_row);
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            let w = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            if i % per_row == per_row - 1 && w & !mask != 0 {
                return Err(Error::NonZeroPadding {
                    offset: self.offset + 8 * i as u64,
                });
            }
            words.push(w);
        }
        self.offset += bytes.len() as u64;
        Ok(HadamardMatrix::from_words_unchecked(self.dim, words))
    }

    fn read_text_line(&mut self, buf: &mut String) -> Result<bool> {
        buf.clear();
        let got = self.reader.read_line(buf)?;
        if got == 0 {
            return Ok(false);
        }
        self.offset += got as u64;
        self.line += 1;
        if buf.ends_with('\n') {
            buf.pop();
        }
        Ok(true)
    }

    fn read_text(&mut self, first: bool) -> Result<HadamardMatrix> {
        let mut buf = String::new();
        if !first {
            if !self.read_text_line(&mut buf)? {
                return Err(Error::TruncatedFile {
                    offset: self.offset,
                });
            }
            if !buf.is_empty() {
                return Err(Error::Malformed {
                    line: self.line,
                    message: "expected a blank line between matrices".into(),
                });
            }
        }
        let m = self.dim.len();
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            if !self.read_text_line(&mut buf)? {
                return Err(Error::TruncatedFile {
                    offset: self.offset,
                });
            }
            let row = parse_vector(&buf).map_err(|e| Error::Malformed {
                line: self.line,
                message: e.to_string(),
            })?;
            if row.dim() != self.dim {
                return Err(Error::Malformed {
                    line: self.line,
                    message: format!("row of length {}, expected {m}", row.len()),
                });
            }
            rows.push(row);
        }
        HadamardMatrix::from_rows(&rows)
    }

    fn check_eof(&mut self) -> Result<()> {
        if self.reader.fill_buf()?.is_empty() {
            Ok(())
        } else {
            Err(Error::TrailingData {
                offset: self.offset,
            })
        }
    }
}

impl<R: BufRead> Iterator for PartitionReader<R> {
    type Item = Result<(u64, HadamardMatrix)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.next >= self.end {
            self.done = true;
            return self.check_eof().err().map(Err);
        }
        let first = self.line <= 1;
        let matrix = match self.format {
            Format::Packed => self.read_packed(),
            Format::Text => self.read_text(first),
        };
        match matrix {
            Ok(m) => {
                let flat = self.next;
                self.next += 1;
                Some(Ok((flat, m)))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn checked_family_size(level: u32, declared: &str, count: u64) -> Result<u64> {
    let mismatch = || Error::CountMismatch {
        level,
        exponent: if level <= 63 { exponent(level) } else { 0 },
        found: declared.to_string(),
    };
    match family_size(level) {
        Ok(size) if size == count => Ok(size),
        _ => Err(mismatch()),
    }
}

fn check_range(level: u32, range: Range<u64>, size: u64) -> Result<Range<u64>> {
    if range.start > range.end || range.end > size {
        return Err(Error::IndexOutOfRange {
            level,
            index: range.end.max(range.start),
            exponent: exponent(level),
        });
    }
    Ok(range)
}

/// Fills as much of `buf` as the reader provides; returns bytes read.
fn read_up_to<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Plain PBM (`P1`) image of a matrix: 0 for +1, 1 for −1, row by row.
/// Raster rows longer than 32 pixels wrap so no line exceeds 70 characters.
pub fn write_pbm<W: Write>(matrix: &HadamardMatrix, sink: W) -> Result<()> {
    let m = matrix.size();
    let mut out = BufWriter::new(sink);
    writeln!(out, "P1\n{m} {m}")?;
    let mut line = String::with_capacity(64);
    for row in matrix.rows() {
        for (t, c) in row.coordinates().enumerate() {
            if t % 32 != 0 {
                line.push(' ');
            }
            line.push(if c > 0 { '0' } else { '1' });
            if t % 32 == 31 || t == m - 1 {
                writeln!(out, "{line}")?;
                line.clear();
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn export_pbm<W: Write>(addr: &PartitionAddress, sink: W) -> Result<()> {
    write_pbm(&matrix_by_address(addr)?, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::decode_address;

    fn text(n: u32, range: Option<Range<u64>>) -> String {
        let mut buf = Vec::new();
        write_partition(n, Format::Text, range, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn text_level_two() {
        assert_eq!(
            text(2, None),
            "HPART n=2 count=2^1\n++++\n++--\n+-+-\n+--+\n\n+++-\n++-+\n+-++\n+---\n"
        );
        assert_eq!(
            text(2, Some(1..2)),
            "HPART n=2 count=2^1 range=1..2\n+++-\n++-+\n+-++\n+---\n"
        );
        assert_eq!(text(2, Some(0..2)), text(2, None));
    }

    #[test]
    fn packed_level_three_size() {
        let mut buf = Vec::new();
        assert_eq!(
            write_partition(3, Format::Packed, None, &mut buf).unwrap(),
            16
        );
        assert_eq!(buf.len(), 16 + 16 * 8 * 8);
        assert_eq!(&buf[..6], MAGIC);
        assert_eq!(buf[6], 3);
        assert_eq!(u64::from_le_bytes(buf[7..15].try_into().unwrap()), 16);
        assert_eq!(buf[15], 1);
    }

    #[test]
    fn read_back_both_formats() {
        let expected: Vec<_> = iter_partition(3).unwrap().collect();
        for format in [Format::Text, Format::Packed] {
            let mut buf = Vec::new();
            write_partition(3, format, None, &mut buf).unwrap();
            let got: Vec<_> = read_partition(&buf[..])
                .unwrap()
                .collect::<Result<Vec<_>>>()
                .unwrap();
            assert_eq!(got.len(), 16);
            for (i, (flat, m)) in got.into_iter().enumerate() {
                assert_eq!(flat, i as u64);
                assert_eq!(m, expected[i]);
            }
        }
    }

    #[test]
    fn ranged_packed_round_trip() {
        let mut buf = Vec::new();
        write_partition(4, Format::Packed, Some(100..110), &mut buf).unwrap();
        let reader = read_partition(&buf[..]).unwrap();
        assert_eq!(reader.declared_range(), 100..110);
        let got: Vec<_> = reader.collect::<Result<Vec<_>>>().unwrap();
        let expected: Vec<_> = iter_partition_range(4, 100..110).unwrap().collect();
        assert_eq!(
            got.iter().map(|g| g.0).collect::<Vec<_>>(),
            (100..110).collect::<Vec<_>>()
        );
        assert_eq!(got.into_iter().map(|g| g.1).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn header_errors() {
        let mut buf = Vec::new();
        write_partition(3, Format::Packed, None, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[7] = 17;
        assert!(matches!(
            read_partition(&bad[..]),
            Err(Error::CountMismatch { .. })
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_partition(&bad[..]), Err(Error::BadMagic)));
        assert!(matches!(
            read_partition(&b"HPART n=3 count=2^5\n"[..]),
            Err(Error::CountMismatch { .. })
        ));
    }

    #[test]
    fn truncation_and_padding() {
        let mut buf = Vec::new();
        write_partition(3, Format::Packed, None, &mut buf).unwrap();
        let cut = 16 + 3 * 64 + 10;
        let results: Vec<_> = read_partition(&buf[..cut]).unwrap().collect();
        assert_eq!(results.len(), 4);
        assert!(results[..3].iter().all(|r| r.is_ok()));
        assert!(matches!(
            results[3],
            Err(Error::TruncatedFile { offset }) if offset == cut as u64
        ));

        let mut padded = buf.clone();
        padded[16 + 8 * 5 + 3] |= 0x10;
        let err = read_partition(&padded[..])
            .unwrap()
            .find_map(|r| r.err())
            .unwrap();
        assert!(matches!(err, Error::NonZeroPadding { offset: 56 }));

        let mut trailing = buf.clone();
        trailing.push(0);
        let err = read_partition(&trailing[..])
            .unwrap()
            .find_map(|r| r.err())
            .unwrap();
        assert!(matches!(err, Error::TrailingData { .. }));
    }

    #[test]
    fn truncated_text() {
        let full = text(3, None);
        let lines: Vec<&str> = full.lines().collect();
        // header plus three 8-row matrices with separators, then half a matrix
        let keep = 1 + 3 * 9 + 4;
        let cut = lines[..keep].join("\n") + "\n";
        let results: Vec<_> = read_partition(cut.as_bytes()).unwrap().collect();
        assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 3);
        assert!(matches!(
            results.last(),
            Some(Err(Error::TruncatedFile { .. }))
        ));
    }

    #[test]
    fn pbm_images() {
        let render = |flat| {
            let mut buf = Vec::new();
            export_pbm(&decode_address(2, flat).unwrap(), &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        assert_eq!(render(0), "P1\n4 4\n0 0 0 0\n0 0 1 1\n0 1 0 1\n0 1 1 0\n");
        assert!(render(1).starts_with("P1\n4 4\n0 0 0 1\n"));

        let mut buf = Vec::new();
        export_pbm(&decode_address(6, 12345).unwrap(), &mut buf).unwrap();
        let img = String::from_utf8(buf).unwrap();
        assert!(img.lines().all(|l| l.len() <= 70));
        assert_eq!(img.lines().count(), 2 + 128);
    }
}
