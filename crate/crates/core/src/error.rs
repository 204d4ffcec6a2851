use thiserror::Error;

use crate::factor::FactorError;
use crate::io::FormatError;
use crate::simgen::SimError;
use crate::spectral::SpectralError;
use crate::tcn::TcnError;
use crate::tensor::TensorError;

/// Any failure surfaced by the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tcn(#[from] TcnError),
}

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for bad or
    /// inconsistent data, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        const CONFIG: i32 = 2;
        const DATA: i32 = 3;
        const NUMERICAL: i32 = 4;
        match self {
            Error::Config(_) => CONFIG,
            Error::Data(_) | Error::Format(_) | Error::Tensor(_) => DATA,
            Error::Numerical(_) | Error::Spectral(_) => NUMERICAL,
            Error::Factor(e) => match e {
                FactorError::RankCount { .. } | FactorError::RankOutOfRange { .. } => CONFIG,
                FactorError::Tensor(_) | FactorError::EmptySeries => DATA,
                _ => NUMERICAL,
            },
            Error::Sim(e) => match e {
                SimError::InvalidConfig(_) => CONFIG,
                SimError::Tensor(_) => DATA,
                _ => NUMERICAL,
            },
            Error::Tcn(e) => match e {
                TcnError::InvalidConfig(_) => CONFIG,
                TcnError::NonFiniteLoss { .. } | TcnError::NonFiniteInput => NUMERICAL,
                _ => DATA,
            },
        }
    }
}
