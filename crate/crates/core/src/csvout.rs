//! Fixed-format CSV writing: header row, `\n` line ends, 12 fractional digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SimError};

/// Fixed-point with 12 fractional digits; non-finite values print as `nan`,
/// `inf`, `-inf`.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let s = format!("{x:.12}");
        if s == "-0.000000000000" { s[1..].to_string() } else { s }
    }
}

/// Incrementally built CSV document.
#[derive(Debug, Clone)]
pub struct Csv {
    buf: String,
    cols: usize,
}

/// One CSV cell.
pub enum Cell<'a> {
    F(f64),
    I(i64),
    U(u64),
    S(&'a str),
}

impl From<f64> for Cell<'_> {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell<'_> {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}
impl From<u64> for Cell<'_> {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}
impl From<i64> for Cell<'_> {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}
impl<'a> From<&'a str> for Cell<'a> {
    fn from(v: &'a str) -> Self {
        Cell::S(v)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf, cols: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        debug_assert_eq!(cells.len(), self.cols);
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.buf.push(',');
            }
            match c {
                Cell::F(v) => self.buf.push_str(&fmt12(*v)),
                Cell::I(v) => write!(self.buf, "{v}").unwrap(),
                Cell::U(v) => write!(self.buf, "{v}").unwrap(),
                Cell::S(v) => self.buf.push_str(v),
            }
        }
        self.buf.push('\n');
    }

    /// Row of floats only.
    pub fn row_f(&mut self, vals: &[f64]) {
        let cells: Vec<Cell> = vals.iter().map(|&v| Cell::F(v)).collect();
        self.row(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.buf)
    }
}

/// Write `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| SimError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| SimError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_format() {
        assert_eq!(fmt12(1.5), "1.500000000000");
        assert_eq!(fmt12(-1e-15), "0.000000000000");
        assert_eq!(fmt12(f64::NAN), "nan");
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[Cell::U(3), Cell::F(0.25)]);
        assert_eq!(c.as_str(), "a,b\n3,0.250000000000\n");
    }
}
