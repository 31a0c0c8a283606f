//! Deterministic CSV writing.
//!
//! Floats are written with Rust's shortest-round-trip formatter, so
//! identical bit patterns always produce identical bytes; lines end with
//! a single `\n` on every platform.

use std::fmt::Write as _;
use std::path::Path;

use crate::harness::HarnessError;

pub struct CsvWriter {
    buffer: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut buffer = String::new();
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        Self {
            buffer,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        debug_assert_eq!(fields.len(), self.columns);
        for (k, f) in fields.iter().enumerate() {
            if k > 0 {
                self.buffer.push(',');
            }
            match f {
                CsvField::Int(v) => {
                    let _ = write!(self.buffer, "{v}");
                }
                CsvField::Float(v) => {
                    let _ = write!(self.buffer, "{v}");
                }
                CsvField::Str(s) => self.buffer.push_str(s),
                CsvField::Hex(v) => {
                    let _ = write!(self.buffer, "{v:016x}");
                }
            }
        }
        self.buffer.push('\n');
    }

    pub fn finish(self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.buffer.as_bytes())?;
        Ok(())
    }

    pub fn into_string(self) -> String {
        self.buffer
    }
}

pub enum CsvField<'a> {
    Int(i64),
    Float(f64),
    Str(&'a str),
    Hex(u64),
}

/// Parse one CSV file into header and string rows. Only used to read the
/// harness's own simple outputs back (no quoting in this schema).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Malformed {
            path: path.display().to_string(),
            reason: "empty file".into(),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_header_and_rows() {
        let mut w = CsvWriter::new(&["a", "b", "c"]);
        w.row(&[CsvField::Int(1), CsvField::Float(2.5), CsvField::Str("x")]);
        w.row(&[CsvField::Int(-3), CsvField::Float(0.1), CsvField::Str("y")]);
        assert_eq!(w.into_string(), "a,b,c\n1,2.5,x\n-3,0.1,y\n");
    }

    #[test]
    fn float_formatting_is_shortest_round_trip() {
        let mut w = CsvWriter::new(&["v"]);
        w.row(&[CsvField::Float(0.1 + 0.2)]);
        let s = w.into_string();
        let val: f64 = s.lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(val, 0.1 + 0.2);
    }
}
