use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate model: {0}")]
    Degenerate(String),
    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },
    #[error("integration failed at t = {last_good_time}: {message}")]
    Integration { message: String, last_good_time: f64 },
    #[error("linearization breakdown: {0}")]
    Breakdown(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Error {
    Error::Numeric {
        message: msg.into(),
        residual,
    }
}
