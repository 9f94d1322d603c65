//! Versioned on-disk formats. Text formats print floats with Rust's shortest
//! round-trip representation, so saving and loading reproduces every value
//! bitwise.

pub mod checkpoint;
pub mod dataset;
pub mod linear;
pub mod log;
pub mod report;
pub mod scores;
pub mod split;

use std::fmt::Write as _;
use std::str::FromStr;

/// Malformed file content, located by 1-based line number (or byte offset
/// for binary formats).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ParseError {
    pub location: Location,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Offset(usize),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Offset(n) => write!(f, "byte offset {n}"),
        }
    }
}

impl ParseError {
    pub fn at_line(line: usize, message: impl Into<String>) -> Self {
        Self {
            location: Location::Line(line),
            message: message.into(),
        }
    }

    pub fn at_offset(offset: usize, message: impl Into<String>) -> Self {
        Self {
            location: Location::Offset(offset),
            message: message.into(),
        }
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Line cursor that remembers the number of the line it last returned.
pub(crate) struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line: usize,
}

impl<'a> LineReader<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines(),
            line: 0,
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::at_line(self.line, message)
    }

    pub fn next(&mut self, what: &str) -> ParseResult<&'a str> {
        match self.lines.next() {
            Some(l) => {
                self.line += 1;
                Ok(l)
            }
            None => Err(ParseError::at_line(
                self.line + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    pub fn expect_exact(&mut self, expected: &str) -> ParseResult<()> {
        let l = self.next(expected)?;
        if l.trim_end() != expected {
            return Err(self.error(format!("expected `{expected}`, found `{l}`")));
        }
        Ok(())
    }

    /// Next line, which must start with `key`; returns the rest.
    pub fn keyed(&mut self, key: &str) -> ParseResult<&'a str> {
        let l = self.next(key)?;
        let mut parts = l.splitn(2, ' ');
        if parts.next() != Some(key) {
            return Err(self.error(format!("expected `{key}` line, found `{l}`")));
        }
        Ok(parts.next().unwrap_or(""))
    }

    pub fn keyed_values<T: FromStr>(&mut self, key: &str, what: &str) -> ParseResult<Vec<T>> {
        let rest = self.keyed(key)?;
        self.values(rest, what)
    }

    pub fn keyed_value<T: FromStr>(&mut self, key: &str, what: &str) -> ParseResult<T> {
        let rest = self.keyed(key)?;
        self.value(rest, what)
    }

    pub fn keyed_exact<T: FromStr>(&mut self, key: &str, count: usize, what: &str) -> ParseResult<Vec<T>> {
        let rest = self.keyed(key)?;
        self.exact_values(rest, count, what)
    }

    pub fn keyed_floats(&mut self, key: &str, count: usize) -> ParseResult<Vec<f64>> {
        let rest = self.keyed(key)?;
        self.floats(rest, count)
    }

    pub fn finish(&mut self) -> ParseResult<()> {
        for l in self.lines.by_ref() {
            self.line += 1;
            if !l.trim().is_empty() {
                return Err(ParseError::at_line(
                    self.line,
                    format!("unexpected trailing content `{l}`"),
                ));
            }
        }
        Ok(())
    }

    pub fn values<T: FromStr>(&self, text: &str, what: &str) -> ParseResult<Vec<T>> {
        text.split_whitespace()
            .map(|tok| {
                tok.parse::<T>()
                    .map_err(|_| self.error(format!("invalid {what} `{tok}`")))
            })
            .collect()
    }

    pub fn value<T: FromStr>(&self, text: &str, what: &str) -> ParseResult<T> {
        let v = self.values::<T>(text, what)?;
        if v.len() != 1 {
            return Err(self.error(format!("expected one {what}, found {}", v.len())));
        }
        Ok(v.into_iter().next().expect("length checked"))
    }

    pub fn exact_values<T: FromStr>(&self, text: &str, count: usize, what: &str) -> ParseResult<Vec<T>> {
        let v = self.values::<T>(text, what)?;
        if v.len() != count {
            return Err(self.error(format!("expected {count} values of {what}, found {}", v.len())));
        }
        Ok(v)
    }

    /// `count` finite floats.
    pub fn floats(&self, text: &str, count: usize) -> ParseResult<Vec<f64>> {
        let v = self.exact_values::<f64>(text, count, "number")?;
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(self.error(format!("non-finite value {bad}")));
        }
        Ok(v)
    }
}

pub(crate) fn push_floats(out: &mut String, values: &[f64]) {
    push_joined(out, values.iter().map(|v| format!("{v:?}")));
}

pub(crate) fn push_ids(out: &mut String, ids: &[usize]) {
    push_joined(out, ids.iter().map(|v| v.to_string()));
}

fn push_joined(out: &mut String, items: impl Iterator<Item = String>) {
    for (i, item) in items.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&item);
    }
    out.push('\n');
}

pub(crate) fn push_line(out: &mut String, args: std::fmt::Arguments<'_>) {
    out.write_fmt(args).expect("writing to a String cannot fail");
    out.push('\n');
}

/// Little-endian writer for the binary formats.
#[derive(Default)]
pub(crate) struct BinWriter {
    pub bytes: Vec<u8>,
}

impl BinWriter {
    pub fn raw(&mut self, b: &[u8]) {
        self.bytes.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.raw(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.raw(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.raw(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        for &x in v {
            self.f64(x);
        }
    }
}

pub(crate) struct BinReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BinReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::at_offset(self.pos, message)
    }

    pub fn take(&mut self, n: usize, what: &str) -> ParseResult<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error(format!("truncated file while reading {what}")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self, what: &str) -> ParseResult<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &str) -> ParseResult<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self, what: &str) -> ParseResult<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    pub fn usize(&mut self, what: &str) -> ParseResult<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| self.error(format!("{what} {v} does not fit in memory")))
    }

    pub fn f64(&mut self, what: &str) -> ParseResult<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    /// Length-prefixed float block whose length must equal `expected`.
    pub fn f64s(&mut self, expected: usize, what: &str) -> ParseResult<Vec<f64>> {
        let n = self.usize(what)?;
        if n != expected {
            return Err(self.error(format!("{what}: expected {expected} values, header says {n}")));
        }
        (0..n).map(|_| self.f64(what)).collect()
    }

    pub fn finish(&self) -> ParseResult<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!("{} unexpected trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}
