//! Little-endian binary helpers shared by the series and checkpoint formats.

use thiserror::Error;

/// Decoding failures. Each variant has a stable numeric [`code`](Self::code).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("foreign byte order (dtype code {0:#04x}); only little-endian f64 is supported")]
    ForeignEndian(u8),
    #[error("unknown dtype code {0:#04x}")]
    UnknownDtype(u8),
    #[error("header truncated at byte {0}")]
    TruncatedHeader(usize),
    #[error("payload length mismatch: header implies {expected} bytes, found {actual}")]
    PayloadLengthMismatch { expected: usize, actual: usize },
    #[error("inconsistent dimensions: {0}")]
    DimInconsistency(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl FormatError {
    pub fn code(&self) -> u16 {
        match self {
            FormatError::BadMagic { .. } => 101,
            FormatError::UnsupportedVersion(_) => 102,
            FormatError::ForeignEndian(_) => 103,
            FormatError::UnknownDtype(_) => 104,
            FormatError::TruncatedHeader(_) => 105,
            FormatError::PayloadLengthMismatch { .. } => 106,
            FormatError::DimInconsistency(_) => 107,
            FormatError::Io(_) => 108,
        }
    }
}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e.to_string())
    }
}

#[derive(Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::TruncatedHeader(self.buf.len()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| {
            FormatError::DimInconsistency(format!("{n} values overflow the address space"))
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Checked product of dimensions.
pub(crate) fn checked_product(dims: &[usize]) -> Result<usize, FormatError> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| FormatError::DimInconsistency(format!("dims {dims:?} overflow")))
    })
}
