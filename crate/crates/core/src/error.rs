use thiserror::Error;

/// Errors raised by the numerical kernels and the performance evaluators.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pole of the gamma function at z = {0}")]
    GammaPole(f64),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no feasible contour: {0}")]
    ContourInfeasible(String),

    /// Quadrature did not reach the requested tolerance. Carries the best
    /// estimate and its error bound.
    #[error("tolerance not met: estimate {estimate:e} with error bound {error:e}")]
    ToleranceNotMet { estimate: f64, error: f64 },

    /// A truncated series was still moving when the term budget ran out.
    #[error("series truncated after {terms} terms: partial sum {partial:e}, last term {last_term:e}")]
    SeriesNotConverged {
        partial: f64,
        last_term: f64,
        terms: usize,
    },

    /// Imaginary residue of a quantity that must be real exceeded tolerance.
    #[error("imaginary part {imag:e} did not cancel against real part {real:e}")]
    NotReal { real: f64, imag: f64 },

    #[error("pole of multiplicity {0} is not supported")]
    UnsupportedPole(usize),

    /// Two evaluation routes for the same quantity disagree.
    #[error("numerical health check failed: {0}")]
    NumericalHealth(String),
}

pub type Result<T> = std::result::Result<T, Error>;
