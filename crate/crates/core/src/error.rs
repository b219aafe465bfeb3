use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    /// A covariance eigenvalue fell outside the physical interval by more than the
    /// corruption tolerance.
    #[error("corrupt covariance: eigenvalue {value:.3e} outside [0, 1]")]
    CorruptCovariance { value: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("band gap closes: {0}")]
    GapClosing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
