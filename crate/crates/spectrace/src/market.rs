//! Matrix Market coordinate I/O.
//!
//! Accepts `%%MatrixMarket matrix coordinate real {general|symmetric}` with
//! 1-based indices and `%` comment lines. Symmetric storage is expanded to
//! full storage on load; duplicate coordinates are summed. `complex`,
//! `integer`, `pattern` fields and `array` format are rejected: the target
//! operands are large sparse real matrices.

use crate::linop::{LinopError, SparseMatrix};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug)]
pub enum MarketError {
    Io(std::io::Error),
    Parse { line: usize, msg: String },
    Unsupported { what: String },
    Shape(LinopError),
}

impl fmt::Display for MarketError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarketError::Io(e) => write!(f, "i/o error: {e}"),
            MarketError::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            MarketError::Unsupported { what } => write!(f, "unsupported Matrix Market {what}"),
            MarketError::Shape(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MarketError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            MarketError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for MarketError {
    fn from(e: std::io::Error) -> Self {
        MarketError::Io(e)
    }
}

impl From<LinopError> for MarketError {
    fn from(e: LinopError) -> Self {
        MarketError::Shape(e)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> MarketError {
    MarketError::Parse { line, msg: msg.into() }
}

/// Loads a coordinate-format file, expanding symmetric storage to both
/// triangles. Indices are converted from the file's 1-based convention.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix, MarketError> {
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file))
}

pub fn read_matrix_market(reader: impl BufRead) -> Result<SparseMatrix, MarketError> {
    let mut lines = reader.lines().enumerate();

    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let banner = banner?;
    let fields: Vec<String> = banner.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, format!("bad banner: {banner:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(MarketError::Unsupported { what: format!("format `{}`", fields[2]) });
    }
    if fields[3] != "real" {
        return Err(MarketError::Unsupported { what: format!("field `{}`", fields[3]) });
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(MarketError::Unsupported { what: format!("qualifier `{other}`") }),
    };

    // size line: first non-comment, non-blank line after the banner
    let (mut rows, mut cols, mut declared_nnz) = (0usize, 0usize, 0usize);
    let mut have_size = false;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        if !have_size {
            rows = parse_field(it.next(), lineno, "row count")?;
            cols = parse_field(it.next(), lineno, "column count")?;
            declared_nnz = parse_field(it.next(), lineno, "entry count")?;
            if it.next().is_some() {
                return Err(parse_err(lineno, "trailing tokens on size line"));
            }
            have_size = true;
            triplets.reserve(declared_nnz);
            continue;
        }
        let r: usize = parse_field(it.next(), lineno, "row index")?;
        let c: usize = parse_field(it.next(), lineno, "column index")?;
        let v: f64 = parse_field(it.next(), lineno, "value")?;
        if it.next().is_some() {
            return Err(parse_err(lineno, "trailing tokens on entry line"));
        }
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(MarketError::Shape(LinopError::IndexOutOfBounds {
                row: r,
                col: c,
                rows,
                cols,
            }));
        }
        triplets.push((r - 1, c - 1, v));
    }
    if !have_size {
        return Err(parse_err(0, "missing size line"));
    }
    if triplets.len() != declared_nnz {
        return Err(parse_err(
            0,
            format!("size line declares {declared_nnz} entries, file has {}", triplets.len()),
        ));
    }
    Ok(SparseMatrix::from_triplets(rows, cols, triplets, symmetric)?)
}

fn parse_field<T: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, MarketError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what}: {tok:?}")))
}

/// Writes coordinate format. Matrices built from symmetric storage are
/// written back as `symmetric` (lower triangle only); everything else as
/// `general`.
pub fn write_matrix_market(
    path: impl AsRef<Path>,
    matrix: &SparseMatrix,
) -> Result<(), MarketError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let symmetric = matrix.stored_symmetric();
    let qualifier = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {qualifier}")?;
    let nnz = if symmetric {
        matrix.entries().filter(|&(r, c, _)| r >= c).count()
    } else {
        matrix.nnz()
    };
    writeln!(w, "{} {} {}", matrix.rows(), matrix.cols(), nnz)?;
    for (r, c, v) in matrix.entries() {
        if symmetric && r < c {
            continue;
        }
        writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
    }
    w.flush()?;
    Ok(())
}
