use thiserror::Error;

use crate::solvers::SeparationDiagnosis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{what} must be integer-valued (row {row}: {value})")]
    NonInteger {
        what: &'static str,
        row: usize,
        value: f64,
    },

    /// X'WX could not be factorized; the design does not have full column rank.
    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("shrinkage target is degenerate: all responses are {0}")]
    DegenerateShrinkage(&'static str),

    #[error("maximum likelihood estimate does not exist ({0:?} separation)")]
    Separation(SeparationDiagnosis),

    #[error("fit did not converge (max score {grad_norm:e} after {iterations} iterations)")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
