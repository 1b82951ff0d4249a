use thiserror::Error;

use crate::quadrature::QuadratureResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("singular point: {0}")]
    Singularity(String),

    #[error("light-cone singularity at x = {x}, t = {t}")]
    LightConeSingularity { x: f64, t: f64 },

    #[error("quadrature did not reach tolerance (value {:e}, error {:e})", .partial.value.norm(), .partial.error_estimate)]
    Convergence { partial: QuadratureResult },

    #[error("integrand does not decay: {successive} successive panels failed to shrink")]
    Decay { partial: QuadratureResult, successive: usize },

    #[error("partial sums are not eventually alternating")]
    Acceleration { partial: QuadratureResult },

    #[error("pole layout rejected: {0}")]
    PoleSeparation(String),

    #[error("sign calibration failed: {0}")]
    SignCalibration(String),

    #[error("grid error: {0}")]
    Grid(String),
}

impl Error {
    /// Best available estimate carried by a quadrature failure, if any.
    pub fn partial(&self) -> Option<&QuadratureResult> {
        match self {
            Error::Convergence { partial }
            | Error::Decay { partial, .. }
            | Error::Acceleration { partial } => Some(partial),
            _ => None,
        }
    }
}

impl Error {
    /// Apply a constant factor to the partial result carried by a quadrature
    /// failure, so that it is expressed in the caller's normalization.
    pub fn scale_partial(self, factor: num_complex::Complex64) -> Error {
        match self {
            Error::Convergence { partial } => Error::Convergence { partial: partial.scaled(factor) },
            Error::Decay { partial, successive } => Error::Decay { partial: partial.scaled(factor), successive },
            Error::Acceleration { partial } => Error::Acceleration { partial: partial.scaled(factor) },
            other => other,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
