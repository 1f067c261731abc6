//! Plain CSV: header row, comma separators, LF line endings, floats written
//! with 17 significant digits so they read back exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::matrix_file::{decode_matrix, MATRIX_MAGIC};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Round-trip exact float text; `NaN` marks undefined values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => format_float(*v),
            Self::Text(s) => s.clone(),
        }
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    fs::write(path, csv_string(header, rows))?;
    Ok(())
}

/// Numeric CSV contents.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// All columns except those named in `skip`, as a matrix.
    pub fn to_matrix(&self, skip: &[&str]) -> Result<Matrix> {
        let keep: Vec<usize> = (0..self.header.len())
            .filter(|&j| !skip.contains(&self.header[j].as_str()))
            .collect();
        let data = self.rows.iter().flat_map(|r| keep.iter().map(move |&j| r[j])).collect();
        Matrix::from_vec(self.rows.len(), keep.len(), data)
    }
}

pub fn parse_csv(text: &str, path: &str) -> Result<CsvTable> {
    let data_err = |message: String| Error::Data {
        path: path.to_string(),
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| data_err("empty CSV file".into()))?;
    let header: Vec<String> = head.split(',').map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(data_err(format!(
                "line {}: {} fields, header has {}",
                i + 1,
                fields.len(),
                header.len()
            )));
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| data_err(format!("line {}, column `{}`: `{}` is not a number", i + 1, header[j], f.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_csv(&text, &path.display().to_string())
}

/// Reads a matrix file, or a numeric CSV (header row, all columns used).
pub fn read_numeric(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let name = path.display().to_string();
    if bytes.starts_with(MATRIX_MAGIC) {
        decode_matrix(&bytes, &name)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Data {
            path: name.clone(),
            message: "neither a matrix file nor UTF-8 CSV".into(),
        })?;
        parse_csv(&text, &name)?.to_matrix(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456789.123456789, f64::MAX, -0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_float(f64::NAN), "NaN");
        assert!(format_float(1.0).starts_with("1.0000000000000000e0"));
    }

    #[test]
    fn write_then_parse() {
        let text = csv_string(&["index", "score"], &[vec![0usize.into(), 0.25.into()], vec![1usize.into(), f64::NAN.into()]]);
        assert!(!text.contains('\r'));
        let t = parse_csv(&text, "t.csv").unwrap();
        assert_eq!(t.column("score").unwrap()[0], 0.25);
        assert!(t.column("score").unwrap()[1].is_nan());
        assert_eq!(t.to_matrix(&["index"]).unwrap().cols(), 1);
    }

    #[test]
    fn bad_rows_are_data_errors() {
        assert!(matches!(parse_csv("a,b\n1,2\n3\n", "x.csv"), Err(Error::Data { message, .. }) if message.contains("line 3")));
        assert!(matches!(parse_csv("a\nfoo\n", "x.csv"), Err(Error::Data { .. })));
        assert!(matches!(parse_csv("", "x.csv"), Err(Error::Data { .. })));
    }
}
