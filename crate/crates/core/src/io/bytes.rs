//! Little-endian byte buffers with offset-aware decode errors.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Default, Clone)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.len(v.len());
        for &x in v {
            self.f64(x);
        }
    }

    pub fn matrix(&mut self, m: &Matrix) {
        self.len(m.rows());
        self.len(m.cols());
        for &x in m.data() {
            self.f64(x);
        }
    }
}

/// Cursor over a byte slice; `base` is the slice's offset within the file so
/// errors report absolute positions.
pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
    base: u64,
    path: &'a str,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8], path: &'a str, base: u64) -> Self {
        Self { data, pos: 0, base, path }
    }

    pub fn offset(&self) -> u64 {
        self.base + self.pos as u64
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        self.error_at(self.offset(), message)
    }

    pub fn error_at(&self, offset: u64, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_string(),
            offset,
            message: message.into(),
        }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.error(format!(
                "truncated {what}: need {n} bytes, {} left",
                self.remaining()
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    /// A length prefix, checked against the bytes left assuming at least
    /// `unit` bytes per element.
    pub fn len(&mut self, what: &str, unit: usize) -> Result<usize> {
        let at = self.offset();
        let n = self.u64(what)?;
        if n.saturating_mul(unit as u64) > self.remaining() as u64 {
            return Err(Error::Format {
                path: self.path.to_string(),
                offset: at,
                message: format!("{what} length {n} exceeds the remaining {} bytes", self.remaining()),
            });
        }
        Ok(n as usize)
    }

    pub fn f64s(&mut self, what: &str) -> Result<Vec<f64>> {
        let n = self.len(what, 8)?;
        (0..n).map(|_| self.f64(what)).collect()
    }

    pub fn matrix(&mut self, what: &str) -> Result<Matrix> {
        let rows = self.len(what, 0)?;
        let cols = self.len(what, 0)?;
        let n = rows
            .checked_mul(cols)
            .filter(|&n| n.saturating_mul(8) <= self.remaining())
            .ok_or_else(|| self.error(format!("{what}: {rows}×{cols} payload exceeds the file")))?;
        let data = (0..n).map(|_| self.f64(what)).collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(rows, cols, data)
    }

    pub fn finish(&self, what: &str) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.error(format!("{} trailing bytes after {what}", self.remaining())));
        }
        Ok(())
    }
}
