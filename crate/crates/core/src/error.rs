use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed network, chain or model description.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The linearized dynamics have an eigenvalue with non-negative real part.
    #[error("parametric instability: {drive} (largest eigenvalue real part {max_real_part:.3e} rad/s)")]
    Instability { drive: String, max_real_part: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    /// More than one resonant feature where a single one was expected.
    #[error("ambiguous trace: {0}")]
    Ambiguity(String),

    /// Estimates that contradict each other or the model beyond noise.
    #[error("inconsistent data: {0}")]
    Inconsistency(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
