//! Matrix Market reading and writing.
//!
//! Sparse matrices: `coordinate` format, `real` or `integer` field,
//! `symmetric` storage (either triangle) or `general` storage that is
//! numerically symmetric. Dense column blocks (eigenvectors) use the
//! `array real general` format. Values are written in shortest round-trip
//! form, so a write followed by a read is exact.

use std::io::{BufRead, Write};

use crate::error::{EedError, Result};
use crate::operator::{CsrMatrix, SymmetricOperator};

/// Largest `|a_ij - a_ji|` accepted in `general` files.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmField {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    Symmetric,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub format: MmFormat,
    pub field: MmField,
    pub symmetry: MmSymmetry,
}

impl MatrixMarketHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let lower = line.trim().to_ascii_lowercase();
        let tok: Vec<&str> = lower.split_whitespace().collect();
        if tok.len() != 5 || tok[0] != "%%matrixmarket" {
            return Err(EedError::parse(1, "missing %%MatrixMarket banner"));
        }
        if tok[1] != "matrix" {
            return Err(EedError::parse(
                1,
                format!("unsupported object '{}'", tok[1]),
            ));
        }
        let format = match tok[2] {
            "coordinate" => MmFormat::Coordinate,
            "array" => MmFormat::Array,
            f => return Err(EedError::parse(1, format!("unsupported format '{f}'"))),
        };
        let field = match tok[3] {
            "real" | "double" => MmField::Real,
            "integer" => MmField::Integer,
            "pattern" => MmField::Pattern,
            f => return Err(EedError::parse(1, format!("unsupported field '{f}'"))),
        };
        let symmetry = match tok[4] {
            "symmetric" => MmSymmetry::Symmetric,
            "general" => MmSymmetry::General,
            s => return Err(EedError::parse(1, format!("unsupported symmetry '{s}'"))),
        };
        Ok(MatrixMarketHeader {
            format,
            field,
            symmetry,
        })
    }
}

/// Non-comment lines after the banner, with 1-based line numbers.
fn body_lines<R: BufRead>(reader: R) -> Result<(MatrixMarketHeader, Vec<(usize, String)>)> {
    let mut lines = reader.lines();
    let banner = match lines.next() {
        Some(l) => l?,
        None => return Err(EedError::parse(1, "empty input")),
    };
    let header = MatrixMarketHeader::parse(&banner)?;
    let mut body = Vec::new();
    for (i, l) in lines.enumerate() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        body.push((i + 2, t.to_string()));
    }
    Ok((header, body))
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| EedError::parse(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| EedError::parse(line, format!("invalid {what}")))
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let v: f64 = tok
        .ok_or_else(|| EedError::parse(line, "missing value"))?
        .parse()
        .map_err(|_| EedError::parse(line, "invalid value"))?;
    if !v.is_finite() {
        return Err(EedError::parse(line, "non-finite value"));
    }
    Ok(v)
}

/// Parse a symmetric sparse matrix.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let (header, body) = body_lines(reader)?;
    if header.format != MmFormat::Coordinate {
        return Err(EedError::parse(1, "expected coordinate format"));
    }
    if header.field == MmField::Pattern {
        return Err(EedError::parse(1, "pattern matrices carry no values"));
    }
    let mut it = body.into_iter();
    let (sl, size) = it
        .next()
        .ok_or_else(|| EedError::parse(2, "missing size line"))?;
    let mut st = size.split_whitespace();
    let rows = parse_usize(st.next(), sl, "row count")?;
    let cols = parse_usize(st.next(), sl, "column count")?;
    let nnz = parse_usize(st.next(), sl, "entry count")?;
    if rows != cols {
        return Err(EedError::parse(
            sl,
            format!("matrix is {rows}x{cols}, not square"),
        ));
    }
    let n = rows;
    let mut entries = std::collections::BTreeMap::new();
    let mut count = 0;
    for (line, text) in it {
        count += 1;
        let mut t = text.split_whitespace();
        let r = parse_usize(t.next(), line, "row index")?;
        let c = parse_usize(t.next(), line, "column index")?;
        let v = parse_f64(t.next(), line)?;
        if t.next().is_some() {
            return Err(EedError::parse(line, "trailing tokens"));
        }
        if r == 0 || c == 0 || r > n || c > n {
            return Err(EedError::parse(
                line,
                format!("index ({r}, {c}) out of range 1..={n}"),
            ));
        }
        if entries.insert((r - 1, c - 1), (v, line)).is_some() {
            return Err(EedError::parse(line, format!("duplicate entry ({r}, {c})")));
        }
    }
    if count != nnz {
        return Err(EedError::parse(
            sl,
            format!("declared {nnz} entries, found {count}"),
        ));
    }
    let mut triplets = Vec::with_capacity(2 * entries.len());
    match header.symmetry {
        MmSymmetry::Symmetric => {
            for (&(r, c), &(v, line)) in &entries {
                if r != c && entries.contains_key(&(c, r)) {
                    return Err(EedError::parse(
                        line,
                        format!("both triangles stored for ({}, {})", r + 1, c + 1),
                    ));
                }
                triplets.push((r, c, v));
                if r != c {
                    triplets.push((c, r, v));
                }
            }
        }
        MmSymmetry::General => {
            for (&(r, c), &(v, line)) in &entries {
                let t = entries.get(&(c, r)).map_or(0.0, |e| e.0);
                if (v - t).abs() > SYMMETRY_TOL {
                    return Err(EedError::parse(
                        line,
                        format!("asymmetric entry ({}, {}): {v} vs {t}", r + 1, c + 1),
                    ));
                }
                triplets.push((r, c, v));
            }
        }
    }
    CsrMatrix::from_triplets(n, &triplets)
}

pub fn read_matrix_market(path: &std::path::Path) -> Result<CsrMatrix> {
    let f = std::fs::File::open(path)?;
    parse_matrix_market(std::io::BufReader::new(f))
}

/// Write the lower triangle in `coordinate real symmetric` format.
pub fn write_matrix_market<W: Write>(mut w: W, m: &CsrMatrix) -> Result<()> {
    let n = m.dim();
    let lower: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|r| {
            m.row(r)
                .filter(move |&(c, _)| c <= r)
                .map(move |(c, v)| (r, c, v))
        })
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{n} {n} {}", lower.len())?;
    for (r, c, v) in lower {
        writeln!(w, "{} {} {v:e}", r + 1, c + 1)?;
    }
    Ok(())
}

/// Write `cols` (each of length `n`) as an `n x k` dense array.
pub fn write_dense_columns<W: Write>(mut w: W, cols: &[Vec<f64>]) -> Result<()> {
    let n = cols.first().map_or(0, Vec::len);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{n} {}", cols.len())?;
    for c in cols {
        for v in c {
            writeln!(w, "{v:e}")?;
        }
    }
    Ok(())
}

/// Read a dense `array real general` block as columns.
pub fn parse_dense_columns<R: BufRead>(reader: R) -> Result<Vec<Vec<f64>>> {
    let (header, body) = body_lines(reader)?;
    if header.format != MmFormat::Array || header.symmetry != MmSymmetry::General {
        return Err(EedError::parse(1, "expected array general format"));
    }
    let mut it = body.into_iter();
    let (sl, size) = it
        .next()
        .ok_or_else(|| EedError::parse(2, "missing size line"))?;
    let mut st = size.split_whitespace();
    let n = parse_usize(st.next(), sl, "row count")?;
    let k = parse_usize(st.next(), sl, "column count")?;
    let mut vals = Vec::with_capacity(n * k);
    for (line, text) in it {
        let mut t = text.split_whitespace();
        vals.push(parse_f64(t.next(), line)?);
        if t.next().is_some() {
            return Err(EedError::parse(line, "expected one value per line"));
        }
    }
    if vals.len() != n * k {
        return Err(EedError::parse(
            sl,
            format!("declared {} values, found {}", n * k, vals.len()),
        ));
    }
    Ok(if n == 0 {
        vec![Vec::new(); k]
    } else {
        vals.chunks(n).map(<[f64]>::to_vec).collect()
    })
}
