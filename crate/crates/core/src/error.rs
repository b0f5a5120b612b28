use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("surface orientation error: signed volume {0} is not positive")]
    Orientation(f64),
    #[error("encoding component {index} = {value} lies outside [-1, 1]")]
    Consistency { index: usize, value: f64 },
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} contains a non-finite value")))
    }
}
