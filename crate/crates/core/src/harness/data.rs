//! Paired covariate/response series, temporal splits and the series file
//! format.
//!
//! Series file layout (little-endian):
//!
//! ```text
//! magic "FATT" | version u8 | dtype u8 | reserved u16
//! K u32 | covariate dims u64 * K
//! q u32 | response dims u64 * q
//! n u64
//! covariates  f64 * (n * prod dims)            time-major, row-major slices
//! responses   f64 * (n * prod response dims)
//! ```
//!
//! dtype 1 is little-endian f64. dtype 2 marks big-endian f64 and is
//! rejected.

use std::path::Path;

use crate::io::{checked_product, ByteReader, ByteWriter, FormatError};
use crate::simgen::SimDataset;
use crate::tensor::{DenseTensor, TensorSeries};
use crate::Error;

pub const SERIES_MAGIC: [u8; 4] = *b"FATT";
pub const SERIES_VERSION: u8 = 1;
pub const DTYPE_F64_LE: u8 = 1;
pub const DTYPE_F64_BE: u8 = 2;

/// Covariate and response series over the same time steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub covariates: TensorSeries,
    pub responses: TensorSeries,
}

impl Dataset {
    pub fn new(covariates: TensorSeries, responses: TensorSeries) -> Result<Self, Error> {
        if covariates.len() != responses.len() {
            return Err(Error::Data(format!(
                "{} covariate steps but {} response steps",
                covariates.len(),
                responses.len()
            )));
        }
        Ok(Self {
            covariates,
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.covariates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariates.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            covariates: self.covariates.slice(range.clone()),
            responses: self.responses.slice(range),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(&SERIES_MAGIC);
        w.u8(SERIES_VERSION);
        w.u8(DTYPE_F64_LE);
        w.bytes(&[0, 0]);
        for shape in [self.covariates.shape(), self.responses.shape()] {
            w.u32(shape.len() as u32);
            for &d in shape {
                w.u64(d as u64);
            }
        }
        w.u64(self.len() as u64);
        for x in &self.covariates {
            w.f64s(x.data());
        }
        for y in &self.responses {
            w.f64s(y.data());
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4).map_err(|_| FormatError::BadMagic {
            expected: SERIES_MAGIC,
            found: bytes.to_vec(),
        })?;
        if magic != SERIES_MAGIC {
            return Err(FormatError::BadMagic {
                expected: SERIES_MAGIC,
                found: magic.to_vec(),
            });
        }
        let version = r.u8()?;
        if version != SERIES_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        match r.u8()? {
            DTYPE_F64_LE => {}
            DTYPE_F64_BE => return Err(FormatError::ForeignEndian(DTYPE_F64_BE)),
            other => return Err(FormatError::UnknownDtype(other)),
        }
        r.take(2)?;
        let read_shape = |r: &mut ByteReader| -> Result<Vec<usize>, FormatError> {
            let order = r.u32()? as usize;
            if order == 0 {
                return Err(FormatError::DimInconsistency("tensor order 0".into()));
            }
            if order > r.remaining() / 8 {
                return Err(FormatError::TruncatedHeader(bytes.len()));
            }
            let dims = (0..order)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            if dims.contains(&0) {
                return Err(FormatError::DimInconsistency(format!(
                    "zero dimension in {dims:?}"
                )));
            }
            Ok(dims)
        };
        let x_shape = read_shape(&mut r)?;
        let y_shape = read_shape(&mut r)?;
        let n = r.u64()? as usize;
        let x_len = checked_product(&x_shape)?;
        let y_len = checked_product(&y_shape)?;
        let expected = n
            .checked_mul(x_len + y_len)
            .and_then(|v| v.checked_mul(8))
            .ok_or_else(|| FormatError::DimInconsistency(format!("n = {n} overflows")))?;
        if r.remaining() != expected {
            return Err(FormatError::PayloadLengthMismatch {
                expected,
                actual: r.remaining(),
            });
        }
        let read_series = |r: &mut ByteReader, shape: &[usize], len: usize| {
            let items = (0..n)
                .map(|_| {
                    let data = r.f64s(len)?;
                    DenseTensor::new(shape.to_vec(), data)
                        .map_err(|e| FormatError::DimInconsistency(e.to_string()))
                })
                .collect::<Result<Vec<_>, FormatError>>()?;
            TensorSeries::new(shape.to_vec(), items)
                .map_err(|e| FormatError::DimInconsistency(e.to_string()))
        };
        let covariates = read_series(&mut r, &x_shape, x_len)?;
        let responses = read_series(&mut r, &y_shape, y_len)?;
        Ok(Dataset {
            covariates,
            responses,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

impl From<&SimDataset> for Dataset {
    fn from(d: &SimDataset) -> Self {
        Dataset {
            covariates: d.covariates.clone(),
            responses: d.responses.clone(),
        }
    }
}

/// Number of leading steps assigned to training: `ceil(ratio n)`, with a
/// small guard so that products like `0.7 * 100` do not round up to 71.
pub fn train_len(n: usize, ratio: f64) -> Result<usize, Error> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio {ratio} must lie in (0, 1)"
        )));
    }
    let k = (ratio * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if k == 0 || k >= n {
        return Err(Error::Data(format!(
            "split of {n} steps at ratio {ratio} leaves an empty side"
        )));
    }
    Ok(k)
}

/// Contiguous temporal split: the first `ceil(ratio n)` steps train.
pub fn split(data: &Dataset, ratio: f64) -> Result<(Dataset, Dataset), Error> {
    let k = train_len(data.len(), ratio)?;
    Ok((data.slice(0..k), data.slice(k..data.len())))
}
