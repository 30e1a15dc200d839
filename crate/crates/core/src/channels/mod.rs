//! Fading and pointing-error models for the two hops: densities, moments and samplers.

pub mod pointing;
pub mod rf;
pub mod thz;

pub use pointing::{pdf_pointing, sample_pointing, PointingParams};
pub use rf::{cdf_snr_rf, pdf_alpha_kms, pdf_snr_rf, sample_alpha_kms, RfFadingParams};
pub use thz::{cdf_snr_thz, pdf_alpha_mu, pdf_snr_thz, sample_alpha_mu, ThzFadingParams};

use crate::error::{Error, Result};

/// Relative size of the last term below which a series counts as converged.
pub const SERIES_REL_TOL: f64 = 1e-10;
/// Hard cap on the pointing-error series.
pub const MAX_SERIES_TERMS: usize = 400;

/// A summed series with the number of terms used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

/// Sum `term(0) + term(1) + ...`: at least `min_terms`, then onwards until the
/// last term is below `SERIES_REL_TOL` of the partial sum.
pub fn sum_series<F>(min_terms: usize, max_terms: usize, mut term: F) -> Result<SeriesSum>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut sum = 0.0;
    let mut last = 0.0;
    for j in 0..max_terms {
        last = term(j)?;
        sum += last;
        if j + 1 >= min_terms && last.abs() <= SERIES_REL_TOL * sum.abs() {
            return Ok(SeriesSum { value: sum, terms: j + 1 });
        }
    }
    Err(Error::SeriesNotConverged { partial: sum, last_term: last, terms: max_terms })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} > 0 violated: {name} = {v}")))
    }
}
