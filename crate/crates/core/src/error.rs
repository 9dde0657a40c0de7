use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error(
        "singular operator-normalization reweighting at k = {k:.6e} 1/m \
         (detection probability {detection:.3e}); the packet support reaches \
         states that are never detected"
    )]
    SingularReweighting { k: f64, detection: f64 },

    #[error(
        "momentum grid loses {lost:.3e} of the packet norm (limit {limit:.1e}); \
         widen the momentum grid"
    )]
    TruncationLoss { lost: f64, limit: f64 },

    #[error(
        "packet carries {mass:.3e} of its norm at k <= 0 (limit {limit:.1e}); \
         incident packets must move to the right"
    )]
    NegativeMomentum { mass: f64, limit: f64 },

    #[error("time grid is not uniform (step deviation {0:.3e})")]
    NonUniformGrid(f64),

    #[error(
        "series has not decayed at the grid ends (start {start:.3e}, end {end:.3e} \
         of peak, need < {limit:.0e}); use a longer time grid to avoid wrap-around"
    )]
    WrapAround { start: f64, end: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("oracle configuration: {0}")]
    OracleConfig(String),

    #[error("conditional evolution gained norm {gain:.3e} at step {step}")]
    SchemeViolation { step: usize, gain: f64 },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation { .. }
            | Error::Parse(_)
            | Error::GridMismatch(_)
            | Error::OracleConfig(_)
            | Error::NonUniformGrid(_)
            | Error::TruncationLoss { .. }
            | Error::NegativeMomentum { .. } => ErrorKind::Validation,
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::SingularReweighting { .. }
            | Error::WrapAround { .. }
            | Error::SchemeViolation { .. } => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}
