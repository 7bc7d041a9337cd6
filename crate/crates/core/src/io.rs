//! Numeric CSV ingestion and the small list parsers used by the command line.
//!
//! The accepted format is strict: comma delimiter, `.` decimal point, one observation per
//! row, every row the same width, no missing values. A first row containing any non-numeric
//! field is treated as a header.

use std::fmt::Write as _;
use std::path::Path;

use csv::{ByteRecord, ReaderBuilder, Trim};

use crate::dimtest::Method;
use crate::error::{Error, Result};
use crate::linalg::{DataMatrix, Matrix};

/// Parsed numeric table.
#[derive(Clone, Debug)]
pub struct CsvData {
    pub header: Option<Vec<String>>,
    pub data: DataMatrix,
}

fn field_str(field: &[u8], row: usize, column: usize) -> Result<&str> {
    std::str::from_utf8(field).map_err(|_| Error::Parse {
        row,
        column,
        message: "field is not valid UTF-8".into(),
    })
}

fn looks_numeric(field: &[u8]) -> bool {
    std::str::from_utf8(field)
        .ok()
        .map(str::trim)
        .is_some_and(|s| s.is_empty() || s.parse::<f64>().is_ok())
}

/// Parses CSV bytes into a data matrix. Row numbers in errors are 1-based record numbers,
/// counting the header.
pub fn parse_csv(bytes: &[u8]) -> Result<CsvData> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(bytes);

    let mut header = None;
    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    let mut record = ByteRecord::new();
    let mut line = 0usize;

    loop {
        match reader.read_byte_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                return Err(Error::Parse {
                    row: line + 1,
                    column: 0,
                    message: e.to_string(),
                })
            }
        }
        line += 1;
        if line == 1 && !record.iter().all(looks_numeric) {
            let names = record
                .iter()
                .enumerate()
                .map(|(j, f)| field_str(f, line, j + 1).map(str::to_owned))
                .collect::<Result<Vec<_>>>()?;
            width = Some(names.len());
            header = Some(names);
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged {
                row: line,
                expected,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let s = field_str(field, line, j + 1)?;
            if s.is_empty() {
                return Err(Error::Parse {
                    row: line,
                    column: j + 1,
                    message: "missing value".into(),
                });
            }
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                row: line,
                column: j + 1,
                message: format!("'{s}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: j + 1,
                    message: format!("'{s}' is not finite"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }

    let cols = width.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::Read("no data rows".into()));
    }
    let data = DataMatrix::new(Matrix::from_row_major(rows, cols, values)?)?;
    Ok(CsvData { header, data })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvData> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Read(format!("{}: {e}", path.display())))?;
    parse_csv(&bytes)
}

/// Formats a matrix as CSV with shortest round-trip float formatting.
pub fn matrix_to_csv(m: &Matrix, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Parses a comma-separated list of non-negative integers such as `2,3,4`. Ranges `a-b`
/// (inclusive) are accepted too.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::invalid(format!("empty entry in list '{s}'")));
        }
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("'{t}' is not a non-negative integer")))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b || b - a > 10_000 {
                    return Err(Error::invalid(format!("bad range '{part}'")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    Ok(out)
}

/// Parses a comma-separated list of method names.
pub fn parse_method_list(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(str::parse).collect()
}
