//! Line-oriented text helpers shared by the model and map file formats.

use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sequential line reader that remembers the file name and line number so
/// every parse error points at its origin.
pub(crate) struct LineReader<R> {
    path: PathBuf,
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    pub(crate) fn new(path: &Path, reader: R) -> Self {
        LineReader {
            path: path.to_path_buf(),
            inner: reader.lines(),
            line_no: 0,
        }
    }

    pub(crate) fn line_no(&self) -> usize {
        self.line_no
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::schema(&self.path, self.line_no, message)
    }

    pub(crate) fn error_at(&self, line: usize, message: impl Into<String>) -> Error {
        Error::schema(&self.path, line, message)
    }

    /// Next non-blank line, or `None` at end of input.
    pub(crate) fn next_line(&mut self) -> Result<Option<String>> {
        for line in self.inner.by_ref() {
            self.line_no += 1;
            let line = line.map_err(|e| Error::io(&self.path, e))?;
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
        Ok(None)
    }

    pub(crate) fn require_line(&mut self, what: &str) -> Result<String> {
        match self.next_line()? {
            Some(line) => Ok(line),
            None => Err(Error::schema(
                &self.path,
                self.line_no + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    /// Reads a `key value...` line and returns the whitespace-separated
    /// fields after the key.
    pub(crate) fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.require_line(key)?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.map(str::to_string).collect()),
            other => Err(self.error(format!(
                "expected `{key}`, found `{}`",
                other.unwrap_or_default()
            ))),
        }
    }

    pub(crate) fn parse<T: FromStr>(&self, field: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| self.error(format!("field `{field}`: cannot parse `{raw}`")))
    }

    pub(crate) fn keyed_one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let fields = self.keyed(key)?;
        if fields.len() != 1 {
            return Err(self.error(format!("`{key}` expects exactly one value")));
        }
        self.parse(key, &fields[0])
    }
}

/// Formats a float so that parsing it back yields the identical bits.
pub(crate) fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Converts a csv error into a schema error that carries its line.
pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::schema(path, line, e.to_string())
}
