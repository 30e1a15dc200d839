//! α-μ fading for the THz hop and the SNR law of fading combined with pointing errors.
//!
//! With `K = γ̄_t Ω² S0² μ^{−2/α}`, the THz SNR is `K G^{2/α} (h_p/S0)²` for
//! `G ~ Gamma(μ, 1)`. Its Mellin moments are
//!
//! ```text
//! E[γ_t^s] = K^s Γ(μ + 2s/α)/Γ(μ) · e^{−λ/2} φ Σ_j β^j/j! (φ + 2s)^{−(j+1)}
//! ```
//!
//! and each `j` term of the density and distribution is one Fox H-function.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::pointing::{sample_pointing, PointingParams};
use super::{positive, sum_series, SeriesSum, MAX_SERIES_TERMS};
use crate::error::{Error, Result};
use crate::specfun::foxh::{fox_h, repeat, FoxHSpec};
use crate::specfun::gamma::{ln_gamma, ln_gamma_complex_unchecked, ln_gamma_p};

/// THz fading parameters. `A_t` and `B_t` are computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ThzFadingParams {
    alpha: f64,
    mu: f64,
    omega: f64,
    gamma_bar: f64,
}

impl ThzFadingParams {
    pub fn new(alpha: f64, mu: f64, omega: f64, gamma_bar: f64) -> Result<Self> {
        positive("alpha_t", alpha)?;
        positive("mu_t", mu)?;
        positive("omega", omega)?;
        positive("gamma_bar_t", gamma_bar)?;
        Ok(Self { alpha, mu, omega, gamma_bar })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    pub fn with_gamma_bar(&self, gamma_bar: f64) -> Result<Self> {
        Self::new(self.alpha, self.mu, self.omega, gamma_bar)
    }

    /// `A_t = α μ^μ / (Ω^{αμ} Γ(μ))`.
    pub fn a_t(&self) -> f64 {
        (self.alpha.ln() + self.mu * self.mu.ln() - self.alpha * self.mu * self.omega.ln() - ln_gamma(self.mu)).exp()
    }

    /// `B_t = μ / Ω^α`.
    pub fn b_t(&self) -> f64 {
        self.mu / self.omega.powf(self.alpha)
    }

    /// `K = γ̄_t Ω² S0² μ^{−2/α}`.
    pub fn snr_scale(&self, pt: &PointingParams) -> f64 {
        self.gamma_bar * (self.omega * pt.s0).powi(2) * self.mu.powf(-2.0 / self.alpha)
    }
}

/// Envelope density of `|h_ft|`.
pub fn pdf_alpha_mu(p: &ThzFadingParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("envelope must be positive, got {x}")));
    }
    Ok(p.a_t() * x.powf(p.alpha * p.mu - 1.0) * (-p.b_t() * x.powf(p.alpha)).exp())
}

/// `P(|h_ft| ≤ x) = P(μ, B_t x^α)`.
pub fn cdf_alpha_mu(p: &ThzFadingParams, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ln_gamma_p(p.mu, p.b_t() * x.powf(p.alpha)).exp()
}

/// `Ω (G/μ)^{1/α}` with `G ~ Gamma(μ, 1)`.
pub fn sample_alpha_mu<R: Rng + ?Sized>(p: &ThzFadingParams, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(p.mu, 1.0).expect("validated shape").sample(rng);
    p.omega * (g / p.mu).powf(1.0 / p.alpha)
}

/// Draw `γ_t = γ̄_t (|h_ft| h_p)²`.
pub fn sample_snr_thz<R: Rng + ?Sized>(p: &ThzFadingParams, pt: &PointingParams, rng: &mut R) -> f64 {
    let h = sample_alpha_mu(p, rng) * sample_pointing(pt, rng);
    p.gamma_bar * h * h
}

/// `ln` of the coefficient `e^{−λ/2} φ β^j / j!` of the `j`-th series term.
pub fn ln_series_weight(pt: &PointingParams, j: usize) -> f64 {
    let base = -pt.lambda() / 2.0 + pt.phi().ln();
    if j == 0 {
        return base;
    }
    let beta = pt.beta();
    if beta == 0.0 {
        return f64::NEG_INFINITY;
    }
    base + j as f64 * beta.ln() - ln_gamma(j as f64 + 1.0)
}

/// Sum a pointing-error series: the single `j = 0` term without boresight,
/// otherwise the convergence-checked truncation.
pub fn pointing_series<F>(pt: &PointingParams, mut term: F) -> Result<SeriesSum>
where
    F: FnMut(usize) -> Result<f64>,
{
    if pt.zero_boresight() {
        return Ok(SeriesSum { value: term(0)?, terms: 1 });
    }
    sum_series(pt.series_terms, MAX_SERIES_TERMS, term)
}

/// `ln` of the `j`-th term of `E[γ_t^s]`.
pub fn ln_snr_moment_term(p: &ThzFadingParams, pt: &PointingParams, s: Complex64, j: usize) -> Complex64 {
    s * p.snr_scale(pt).ln() + ln_gamma_complex_unchecked(p.mu + 2.0 * s / p.alpha) - ln_gamma(p.mu)
        + ln_series_weight(pt, j)
        - (j as f64 + 1.0) * (pt.phi() + 2.0 * s).ln()
}

/// `E[γ_t^s]` for real `s` in closed form, `s > −min(αμ, φ)/2`.
pub fn snr_moment(p: &ThzFadingParams, pt: &PointingParams, s: f64) -> f64 {
    let phi = pt.phi();
    let pointing = phi / (phi + 2.0 * s) * (-pt.lambda() * s / (phi + 2.0 * s)).exp();
    p.snr_scale(pt).powf(s) * (ln_gamma(p.mu + 2.0 * s / p.alpha) - ln_gamma(p.mu)).exp() * pointing
}

fn pdf_spec(p: &ThzFadingParams, pt: &PointingParams, j: usize) -> Result<FoxHSpec> {
    let (a, am) = (p.alpha, p.alpha * p.mu);
    let phi = pt.phi();
    let mut lower = vec![(0.0, 1.0)];
    lower.extend(repeat((phi - am, a), j + 1));
    FoxHSpec::new(j + 2, 0, repeat((1.0 + phi - am, a), j + 1), lower)
}

fn cdf_spec(p: &ThzFadingParams, pt: &PointingParams, j: usize) -> Result<FoxHSpec> {
    let (a, am, mu) = (p.alpha, p.alpha * p.mu, p.mu);
    let phi = pt.phi();
    let mut upper = vec![(1.0 - mu, 1.0)];
    upper.extend(repeat((1.0 + phi - am, a), j + 1));
    let mut lower = vec![(0.0, 1.0)];
    lower.extend(repeat((phi - am, a), j + 1));
    lower.push((-mu, 1.0));
    FoxHSpec::new(j + 2, 1, upper, lower)
}

/// Density of `γ_t` from the truncated pointing series, one Fox H-function per term.
pub fn pdf_snr_thz(p: &ThzFadingParams, pt: &PointingParams, gamma: f64) -> Result<SeriesSum> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {gamma}")));
    }
    let k = p.snr_scale(pt);
    let zeta = (gamma / k).powf(p.alpha / 2.0);
    let am2 = p.alpha * p.mu / 2.0;
    let ln_pref = (p.alpha / 2.0).ln() - ln_gamma(p.mu) + (am2 - 1.0) * gamma.ln() - am2 * k.ln();
    pointing_series(pt, |j| {
        let w = ln_series_weight(pt, j);
        if w == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let h = fox_h(&pdf_spec(p, pt, j)?, zeta)?.value;
        Ok((ln_pref + w).exp() * h)
    })
}

/// `P(γ_t ≤ γ)` from the truncated pointing series.
pub fn cdf_snr_thz(p: &ThzFadingParams, pt: &PointingParams, gamma: f64) -> Result<SeriesSum> {
    if gamma <= 0.0 {
        return Ok(SeriesSum { value: 0.0, terms: 1 });
    }
    let k = p.snr_scale(pt);
    let zeta = (gamma / k).powf(p.alpha / 2.0);
    let am2 = p.alpha * p.mu / 2.0;
    let ln_pref = -ln_gamma(p.mu) + am2 * (gamma / k).ln();
    pointing_series(pt, |j| {
        let w = ln_series_weight(pt, j);
        if w == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let h = fox_h(&cdf_spec(p, pt, j)?, zeta)?.value;
        Ok((ln_pref + w).exp() * h)
    })
}
