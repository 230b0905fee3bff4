//! TSV input and output.
//!
//! Element files hold one `key<TAB>value` pair per line; aggregated files use
//! the same layout with the frequency as the value. Lines starting with `#`
//! and blank lines are skipped.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::frequency::{aggregate, Element, FrequencyVector, Key};

/// Iterator over the `key<TAB>value` records of a TSV stream.
pub struct TsvRecords<R> {
    reader: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> TsvRecords<R> {
    pub fn new(reader: R) -> Self {
        TsvRecords {
            reader,
            line_no: 0,
            buf: String::new(),
        }
    }

    /// Line number of the most recently read line.
    pub fn line(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for TsvRecords<R> {
    type Item = Result<Element>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            return Some(parse_line(line, self.line_no));
        }
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Element> {
    let parse_err = |message: String| Error::Parse { line: line_no, message };
    let (key, value) = line
        .split_once('\t')
        .ok_or_else(|| parse_err("expected `key<TAB>value`".into()))?;
    if value.contains('\t') {
        return Err(parse_err("expected exactly two tab-separated fields".into()));
    }
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("value `{}` is not a number", value.trim())))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(parse_err(format!("value {v} must be finite and nonnegative")));
    }
    Ok(Element {
        key: Key::from(key),
        value: v,
    })
}

/// Read every element of a TSV stream.
pub fn read_elements<R: BufRead>(reader: R) -> Result<Vec<Element>> {
    TsvRecords::new(reader).collect()
}

/// Read an aggregated (or raw) TSV stream into a frequency vector.
pub fn read_frequencies<R: BufRead>(reader: R) -> Result<FrequencyVector> {
    let elements = read_elements(reader)?;
    aggregate(elements)
}

/// Write `key<TAB>frequency` lines in rank order.
pub fn write_frequencies<W: Write>(w: &FrequencyVector, mut out: W) -> Result<()> {
    for (k, f) in w.iter() {
        writeln!(out, "{k}\t{f}")?;
    }
    out.flush()?;
    Ok(())
}
