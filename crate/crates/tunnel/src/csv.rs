//! Minimal CSV emission with C `%.17g` number formatting, so reruns of the
//! same configuration produce byte-identical files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `x` like C's `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    const PRECISION: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{:.*}", (PRECISION - 1 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell<'a> {
    /// Floating-point value, written with 17 significant digits.
    Num(f64),
    /// Integer value.
    Int(usize),
    /// Literal text (must not contain commas or newlines).
    Text(&'a str),
}

/// Buffered CSV writer with a mandatory header and LF line endings.
pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
    line: String,
}

impl CsvWriter<BufWriter<File>> {
    /// Creates `path`, writing the header row.
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        CsvWriter::new(BufWriter::new(file), header).map_err(|e| Error::io(path, e))
    }
}

impl<W: Write> CsvWriter<W> {
    /// Wraps `out` and writes the header row.
    pub fn new(mut out: W, header: &[&str]) -> std::io::Result<Self> {
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
            line: String::new(),
        })
    }

    /// Writes one row.
    pub fn row(&mut self, cells: &[Cell<'_>]) -> std::io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        self.line.clear();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.line.push(',');
            }
            match cell {
                Cell::Num(x) => self.line.push_str(&fmt_g17(*x)),
                Cell::Int(n) => {
                    let _ = write!(self.line, "{n}");
                }
                Cell::Text(s) => self.line.push_str(s),
            }
        }
        self.line.push('\n');
        self.out.write_all(self.line.as_bytes())
    }

    /// Flushes and returns the inner writer.
    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
