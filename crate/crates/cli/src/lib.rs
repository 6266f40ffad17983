//! The `hpart` command line.
//!
//! Exit codes: 0 on success or a passing verification, 1 when verification
//! fails or output cannot be written, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::ops::Range;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hpart::io::{read_partition, write_partition, write_pbm, Format};
use hpart::verify::{Failure, MatrixList};
use hpart::{
    count_exponent, locate_vector, matrix_by_address, parse_address, parse_vector,
    partition_feasible, verify_partition_full, verify_partition_sampled, verify_source, Error,
    OrthogonalityBound, PartitionBuilder, Reason, VerifyReport,
};
use rayon::prelude::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "hpart",
    version,
    about = "Partition the distinct Hadamard vectors of length 2^n into Hadamard matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Packed,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Packed => Format::Packed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the level-n family (or a flat-index range of it).
    Generate {
        #[arg(short = 'n')]
        n: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Flat indices `a..b` (end exclusive).
        #[arg(long, value_parser = parse_range)]
        range: Option<Range<u64>>,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Check that the family is a partition into Hadamard matrices.
    Verify {
        #[arg(short = 'n')]
        n: u32,
        /// Check every matrix and exact coverage of all vectors.
        #[arg(long, conflicts_with_all = ["samples", "seed"])]
        full: bool,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Verify a partition file instead of the built-in construction.
        #[arg(long, conflicts_with_all = ["samples", "seed"])]
        input: Option<PathBuf>,
    },
    /// Find the matrix, row and sign holding a vector.
    Locate {
        #[arg(short = 'n')]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Print the family size as a power of two.
    Count {
        #[arg(short = 'n', allow_negative_numbers = true)]
        n: i64,
    },
    /// Decide whether dimension m admits a partition.
    Feasible {
        #[arg(short = 'm')]
        m: u64,
    },
    /// Measure generation throughput.
    Bench {
        #[arg(short = 'n')]
        n: u32,
        /// Number of matrices to generate (capped at the family size).
        #[arg(long, default_value_t = 1 << 20)]
        matrices: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render one matrix as a plain PBM image.
    Pbm {
        #[arg(short = 'n')]
        n: u32,
        /// Flat index, or nested `(i,j,k)` address above level 6.
        #[arg(long)]
        matrix: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let start = a.trim().parse().map_err(|e| format!("range start: {e}"))?;
    let end = b.trim().parse().map_err(|e| format!("range end: {e}"))?;
    if start > end {
        return Err(format!("empty range {s:?}"));
    }
    Ok(start..end)
}

enum CliError {
    Usage(String),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

/// Runs the CLI on `args` (including the program name).
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failed(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAIL
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Generate {
            n,
            format,
            range,
            output,
        } => {
            match output {
                Some(path) => {
                    write_partition(n, format.into(), range, File::create(path)?)?;
                }
                None => {
                    write_partition(n, format.into(), range, &mut *out)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            n,
            full,
            samples,
            seed,
            threads,
            input,
        } => {
            let report = with_threads(threads, || {
                Ok(match input {
                    Some(path) => verify_file(n, &path)?,
                    None if full => verify_partition_full(n)?,
                    None => verify_partition_sampled(
                        n,
                        samples.unwrap_or(DEFAULT_SAMPLES),
                        seed.unwrap_or(DEFAULT_SEED),
                    )?,
                })
            })?;
            write!(out, "{}", report.to_text())?;
            writeln!(err, "elapsed={:.3}s", report.elapsed.as_secs_f64())?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Locate { n, vector } => {
            let v = parse_vector(&vector)?;
            if v.dim().level() != n {
                return Err(CliError::Usage(format!(
                    "vector has length {}, level {n} needs {}",
                    v.len(),
                    1u64 << n.min(63)
                )));
            }
            let loc = locate_vector(&v)?;
            writeln!(out, "matrix={} row={} sign={}", loc.addr, loc.row, loc.sign)?;
            Ok(EXIT_OK)
        }
        Command::Count { n } => {
            writeln!(out, "2^{}", count_exponent(n)?)?;
            Ok(EXIT_OK)
        }
        Command::Feasible { m } => {
            let verdict = partition_feasible(m)?;
            writeln!(out, "{verdict}")?;
            if let Reason::DivisibilityFails { residue } = verdict.reason {
                writeln!(out, "residue: 2^{} mod {m} = {residue}", m - 1)?;
            }
            match verdict.bound {
                Some(OrthogonalityBound::OddDimension) => writeln!(
                    out,
                    "note: odd length, no two Hadamard vectors of length {m} are orthogonal"
                )?,
                Some(OrthogonalityBound::TwiceOddDimension) => writeln!(
                    out,
                    "note: at most two mutually orthogonal Hadamard vectors of length {m}"
                )?,
                None => {}
            }
            Ok(EXIT_OK)
        }
        Command::Bench {
            n,
            matrices,
            threads,
        } => {
            let line = with_threads(threads, || bench(n, matrices))?;
            writeln!(out, "{line}")?;
            Ok(EXIT_OK)
        }
        Command::Pbm { n, matrix, output } => {
            let addr = parse_address(n, &matrix)?;
            let m = matrix_by_address(&addr)?;
            match output {
                Some(path) => write_pbm(&m, File::create(path)?)?,
                None => write_pbm(&m, &mut *out)?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T, CliError>
where
    T: Send,
    F: FnOnce() -> Result<T, CliError> + Send,
{
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Failed(e.to_string()))?;
            pool.install(f)
        }
    }
}

/// Reads a partition file and verifies it. Unreadable content is reported
/// as a failure, not a usage error.
fn verify_file(n: u32, path: &PathBuf) -> Result<VerifyReport, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let mut matrices = Vec::new();
    let mut problem = None;
    let mut level = n;
    match read_partition(file) {
        Ok(reader) => {
            level = reader.level();
            for item in reader {
                match item {
                    Ok((_, m)) => matrices.push(m),
                    Err(e) => {
                        problem = Some(e.to_string());
                        break;
                    }
                }
            }
        }
        Err(e) => problem = Some(e.to_string()),
    }
    let mut report = if level == n {
        verify_source(&MatrixList::new(n, matrices)?)?
    } else {
        let mut r = verify_source(&MatrixList::new(n, Vec::new())?)?;
        r.push_failure(Failure::WrongLevel {
            expected: n,
            found: level,
        });
        r
    };
    if let Some(message) = problem {
        report.push_failure(Failure::Unreadable { message });
    }
    Ok(report)
}

fn bench(n: u32, matrices: u64) -> Result<String, CliError> {
    let builder = PartitionBuilder::new(n)?;
    let count = matrices.min(builder.family_size()).max(1);
    let m = 1usize << n;
    let start = Instant::now();
    let checksum = (0..count)
        .into_par_iter()
        .fold(
            || (vec![0u64; m], 0u64),
            |(mut rows, acc), flat| {
                builder.fill_rows(flat, &mut rows);
                let x = rows.iter().fold(acc, |a, &w| {
                    a.wrapping_add(w.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                });
                (rows, x)
            },
        )
        .map(|(_, x)| x)
        .reduce(|| 0, u64::wrapping_add);
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    Ok(format!(
        "level={n} matrices={count} rows={} seconds={secs:.3} matrices/sec={:.0} rows/sec={:.0} checksum={checksum:016x}",
        count * m as u64,
        count as f64 / secs,
        (count * m as u64) as f64 / secs,
    ))
}
