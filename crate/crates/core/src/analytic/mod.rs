//! End-to-end performance of the fixed-gain relay link: density, outage,
//! average BER, ergodic capacity, their high-SNR asymptotes and the diversity order.
//!
//! With `γ = γ_r γ_t / (γ_t + C)` the distribution splits as
//! `F_γ(z) = F_{γ_r}(z) + D(z)`, where the correction `D` is a double
//! Mellin–Barnes integral in the moments of both hops:
//!
//! ```text
//! D(z) = (1/(2πi)²) ∫∫ E[γ_r^s] Γ(s+v)/Γ(1+s) · Γ(v)Γ(1−v)/Γ(1+v) · C^v E[γ_t^{−v}] z^{−s} ds dv
//! ```
//!
//! on `0 < Re v < min(1, α_t μ_t/2, φ/2)`, `Re s > max(−Re v, −α_r μ_r/2)`.
//! Expanding both moments term by term makes every `(n, j)` piece a bivariate
//! Fox H-function (see [`exact::correction_term_spec`]); the evaluator keeps the
//! `n`-sum inside the RF moment and integrates all `j` terms on one grid.

pub mod asymptotic;
pub mod exact;

pub use asymptotic::{asymptotic_psi, asymptotic_terms, diversity_order, AsymptoticTerms, Metric};
pub use exact::{
    average_ber, average_ber_by_quadrature, ergodic_capacity, ergodic_capacity_by_quadrature,
    outage_by_conditioning, outage_probability, pdf_end_to_end,
};

use crate::channels::{PointingParams, RfFadingParams, ThzFadingParams};
use crate::error::{Error, Result};
use crate::linkbudget::{semi_blind_c, RelayParams};
use crate::specfun::QuadOptions;

/// The two hops, the pointing model and the relay gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub rf: RfFadingParams,
    pub thz: ThzFadingParams,
    pub pt: PointingParams,
    pub relay: RelayParams,
}

impl SystemModel {
    pub fn new(rf: RfFadingParams, thz: ThzFadingParams, pt: PointingParams, relay: RelayParams) -> Result<Self> {
        pt.validate()?;
        if !(relay.c > 0.0 && relay.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C > 0 violated: C = {}", relay.c)));
        }
        Ok(Self { rf, thz, pt, relay })
    }

    /// Model with the semi-blind relay constant computed from the RF hop.
    pub fn semi_blind(rf: RfFadingParams, thz: ThzFadingParams, pt: PointingParams) -> Result<Self> {
        let relay = semi_blind_c(&rf)?;
        Self::new(rf, thz, pt, relay)
    }

    /// Same model at new average SNRs. A semi-blind gain is recomputed.
    pub fn with_gamma_bars(&self, gamma_bar_r: f64, gamma_bar_t: f64) -> Result<Self> {
        let rf = self.rf.with_gamma_bar(gamma_bar_r)?;
        let thz = self.thz.with_gamma_bar(gamma_bar_t)?;
        match self.relay.gain_mode {
            crate::linkbudget::GainMode::SemiBlind => Self::semi_blind(rf, thz, self.pt.clone()),
            crate::linkbudget::GainMode::Explicit => Self::new(rf, thz, self.pt.clone(), self.relay),
        }
    }
}

/// Modulation constants of the conditional error `Γ(p, qγ) / (2Γ(p))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationParams {
    pub p: f64,
    pub q: f64,
}

impl ModulationParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p > 0 violated: p = {p}")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q > 0 violated: q = {q}")));
        }
        Ok(Self { p, q })
    }
}

impl Default for ModulationParams {
    fn default() -> Self {
        Self { p: 0.5, q: 1.0 }
    }
}

/// Evaluation controls for the analytic metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOptions {
    pub quad: QuadOptions,
    /// Compare BER and capacity with their quadrature fallbacks and fail on a
    /// relative gap above `health_tol`.
    pub cross_check: bool,
    pub health_tol: f64,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self { quad: QuadOptions { rel_tol: 1e-8, ..QuadOptions::default() }, cross_check: true, health_tol: 0.02 }
    }
}

/// An analytic metric with the pointing-series length that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticValue {
    pub value: f64,
    pub error: f64,
    pub series_terms: usize,
}
