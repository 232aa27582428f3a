//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error enum. Variants map onto the CLI exit-code contract:
/// parse/capacity problems are usage errors, `Numeric` is a numeric
/// failure, `Pole`/`Domain`/`RegionTooSmall` are domain errors.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text could not be parsed; carries the offending token.
    #[error("parse error: {0}")]
    Parse(String),

    /// A configured size cap would be exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iteration failed to converge or a result overflowed the
    /// extended-exponent safety window.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Evaluation at or through a critical point. `index` is the orbit
    /// index at which the critical point was hit, when applicable.
    #[error("pole error{}: {msg}", index.map(|i| format!(" at orbit index {i}")).unwrap_or_default())]
    Pole {
        index: Option<usize>,
        msg: String,
    },

    /// Precondition on the mathematical domain violated (non-escaping
    /// input, contour containing an extra critical point, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A level curve left the query region.
    #[error("region too small: {0}")]
    RegionTooSmall(String),
}

impl Error {
    pub(crate) fn pole(index: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Pole {
            index,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
