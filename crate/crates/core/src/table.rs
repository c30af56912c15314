//! Plain-text numeric tables: a header row followed by comma-separated values.

use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Formats a value with 12 significant digits in scientific notation so that
/// output is stable across platforms.
pub fn format_value(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_row<W: Write>(out: &mut W, values: &[f64]) -> io::Result<()> {
    let line: Vec<String> = values.iter().map(|&v| format_value(v)).collect();
    writeln!(out, "{}", line.join(","))
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Columns { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse `{text}` as a number")]
    Number { line: usize, text: String },
    #[error("table has no data rows")]
    Empty,
}

/// Reads a numeric table whose header must match `columns` exactly.
pub fn read_numeric<R: BufRead>(input: R, columns: &[&str]) -> Result<Vec<Vec<f64>>, TableError> {
    let expected = columns.join(",");
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !header_seen {
            let found: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if found != columns {
                return Err(TableError::Header { expected, found: trimmed.to_string() });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(TableError::Columns { line: i + 1, expected: columns.len(), found: fields.len() });
        }
        let row = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| TableError::Number { line: i + 1, text: f.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(TableError::Empty);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(0.5), "5.00000000000e-1");
        assert_eq!(format_value(-1234.5), "-1.23450000000e3");
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        writeln!(buf, "a,b").unwrap();
        write_row(&mut buf, &[1.0, -2.5e-7]).unwrap();
        let rows = read_numeric(buf.as_slice(), &["a", "b"]).unwrap();
        assert_eq!(rows, vec![vec![1.0, -2.5e-7]]);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let err = read_numeric("x,y\n1,2\n".as_bytes(), &["a", "b"]).unwrap_err();
        assert!(matches!(err, TableError::Header { .. }));
        let err = read_numeric("a,b\n1\n".as_bytes(), &["a", "b"]).unwrap_err();
        assert!(matches!(err, TableError::Columns { line: 2, .. }));
    }
}
