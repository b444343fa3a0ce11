use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation, measure, Loewner, and rate layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("measure is not a probability measure (total mass {total})")]
    NotProbability { total: f64 },

    #[error("time {t} is outside the driving range [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("point {re}+{im}i is not inside the unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("operation requires a point-driven chain")]
    NotPointDriven,

    #[error("oracle check failed for {what}: expected {expected}, found {found}")]
    OracleMismatch { what: String, expected: f64, found: f64 },

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
