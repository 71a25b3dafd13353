use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical parameter left its admissible domain (e.g. non-positive mass).
    #[error("domain error at t = {t}: {what}")]
    Domain { what: String, t: f64 },

    /// The auxiliary function collapsed onto the configured floor.
    #[error("auxiliary solution hit the singularity floor at t = {t} (sigma = {sigma:e})")]
    Singularity { t: f64, sigma: f64 },

    /// Step-size underflow, step budget exhausted or non-finite state.
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("t = {t} lies outside the horizon [{t0}, {t1}]")]
    OutsideHorizon { t: f64, t0: f64, t1: f64 },

    #[error("invalid Fock index (n = {n}, m = {m}): need |m| <= n and n - m even")]
    InvalidIndex { n: i64, m: i64 },

    #[error("grid configuration: {0}")]
    Grid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
