//! Binary checkpoint format.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic "FTCN" | version u8 | activation u8 | lagged u8 | reserved u8
//! input_width u32 | output_width u32 | kernel_size u32 | blocks u32
//! channels u32 * blocks | dilations u32 * blocks
//! dropout f64 | learning_rate f64 | epochs u64 | batch_length u64 (0 = full)
//! patience u64 | validation_fraction f64 | seed u64
//! input mean, input scale   f64 * input_width each
//! target mean, target scale f64 * output_width each
//! weight_count u64 | weights f64 * weight_count
//! ```

use std::path::Path;

use super::network::parameter_count;
use super::train::Standardizer;
use super::{Activation, TcnConfig, TcnError, TcnModel};
use crate::io::{ByteReader, ByteWriter, FormatError};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"FTCN";
pub const CHECKPOINT_VERSION: u8 = 1;

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Linear => 1,
    }
}

fn to_u32(v: usize) -> u32 {
    u32::try_from(v).expect("dimension fits in u32")
}

impl TcnModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut w = ByteWriter::new();
        w.bytes(&CHECKPOINT_MAGIC);
        w.u8(CHECKPOINT_VERSION);
        w.u8(activation_code(c.activation));
        w.u8(c.use_lagged_response as u8);
        w.u8(0);
        w.u32(to_u32(c.input_width));
        w.u32(to_u32(c.output_width));
        w.u32(to_u32(c.kernel_size));
        w.u32(to_u32(c.channels.len()));
        for &ch in &c.channels {
            w.u32(to_u32(ch));
        }
        for &d in &c.dilations {
            w.u32(to_u32(d));
        }
        w.f64(c.dropout_rate);
        w.f64(c.learning_rate);
        w.u64(c.epochs as u64);
        w.u64(c.batch_length.unwrap_or(0) as u64);
        w.u64(c.patience as u64);
        w.f64(c.validation_fraction);
        w.u64(c.seed);
        w.f64s(self.input_norm.mean());
        w.f64s(self.input_norm.scale());
        w.f64s(self.target_norm.mean());
        w.f64s(self.target_norm.scale());
        w.u64(self.weights.len() as u64);
        w.f64s(&self.weights);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TcnError> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4).map_err(|_| FormatError::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found: bytes.to_vec(),
        })?;
        if magic != CHECKPOINT_MAGIC {
            return Err(FormatError::BadMagic {
                expected: CHECKPOINT_MAGIC,
                found: magic.to_vec(),
            }
            .into());
        }
        let version = r.u8()?;
        if version != CHECKPOINT_VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let activation = match r.u8()? {
            0 => Activation::Relu,
            1 => Activation::Linear,
            other => {
                return Err(FormatError::DimInconsistency(format!(
                    "unknown activation code {other}"
                ))
                .into())
            }
        };
        let lagged = r.u8()? != 0;
        r.u8()?;
        let input_width = r.u32()? as usize;
        let output_width = r.u32()? as usize;
        let kernel_size = r.u32()? as usize;
        let blocks = r.u32()? as usize;
        if blocks > r.remaining() / 8 {
            return Err(FormatError::TruncatedHeader(bytes.len()).into());
        }
        let channels = (0..blocks)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let dilations = (0..blocks)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let dropout_rate = r.f64()?;
        let learning_rate = r.f64()?;
        let epochs = r.u64()? as usize;
        let batch = r.u64()? as usize;
        let patience = r.u64()? as usize;
        let validation_fraction = r.f64()?;
        let seed = r.u64()?;
        let config = TcnConfig {
            input_width,
            output_width,
            channels,
            kernel_size,
            dilations,
            activation,
            dropout_rate,
            learning_rate,
            epochs,
            batch_length: (batch != 0).then_some(batch),
            validation_fraction,
            patience,
            seed,
            use_lagged_response: lagged,
        };
        config
            .validate()
            .map_err(|e| FormatError::DimInconsistency(e.to_string()))?;
        let norms = 2 * (input_width + output_width);
        if norms > r.remaining() / 8 {
            return Err(FormatError::TruncatedHeader(bytes.len()).into());
        }
        let input_norm = Standardizer::from_parts(r.f64s(input_width)?, r.f64s(input_width)?);
        let target_norm = Standardizer::from_parts(r.f64s(output_width)?, r.f64s(output_width)?);
        let count = r.u64()? as usize;
        let expected = parameter_count(&config);
        if count != expected {
            return Err(FormatError::DimInconsistency(format!(
                "header declares {count} weights but the architecture has {expected}"
            ))
            .into());
        }
        let payload = expected * 8;
        if r.remaining() != payload {
            return Err(FormatError::PayloadLengthMismatch {
                expected: payload,
                actual: r.remaining(),
            }
            .into());
        }
        let weights = r.f64s(expected)?;
        TcnModel::from_parts(config, weights, input_norm, target_norm)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TcnError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| FormatError::from(e).into())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TcnError> {
        let bytes = std::fs::read(path).map_err(FormatError::from)?;
        Self::from_bytes(&bytes)
    }
}
