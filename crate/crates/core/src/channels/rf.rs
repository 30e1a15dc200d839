//! α-κ-μ shadowed (α-KMS) fading for the RF hop.
//!
//! With `t = W^{α/2}/c` for the power `W = |h|²`, `t` has density
//! `(1−k)^m / Γ(μ) · t^{μ−1} e^{−t} ₁F₁(m; μ; k t)`, `k = μκ/(μκ + m)`.
//! This is a negative-binomial mixture of `Gamma(μ + n, 1)` laws with weights
//! `w_n = (1−k)^m (m)_n k^n / n!`, which drives both the moments and the sampler.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::positive;
use crate::error::{Error, Result};
use crate::specfun::foxh::{meijer_g, meijer_g_series_scaled, FoxHSpec};
use crate::specfun::gamma::{ln_gamma, ln_gamma_complex_unchecked, ln_gamma_p};
use crate::specfun::hyper::ln_hyp1f1;

const MIXTURE_TAIL: f64 = 1e-13;
const MAX_MIXTURE_TERMS: usize = 50_000;

/// RF fading parameters. `c` and the mixture weights are derived at
/// construction from the shape parameters so that `E[|h|²] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFadingParams {
    alpha: f64,
    kappa: f64,
    mu: f64,
    m: f64,
    gamma_bar: f64,
    c: f64,
    weights: Vec<f64>,
}

impl RfFadingParams {
    pub fn new(alpha: f64, kappa: f64, mu: f64, m: f64, gamma_bar: f64) -> Result<Self> {
        positive("alpha_r", alpha)?;
        positive("mu_r", mu)?;
        positive("m_r", m)?;
        positive("gamma_bar_r", gamma_bar)?;
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa_r >= 0 violated: kappa_r = {kappa}")));
        }
        let weights = mixture_weights(mu * kappa / (mu * kappa + m), m)?;
        let mut p = Self { alpha, kappa, mu, m, gamma_bar, c: 1.0, weights };
        let moment = p.t_moment(2.0 / alpha);
        p.c = moment.powf(-alpha / 2.0);
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `k = μκ/(μκ + m)`, the argument scale of the hypergeometric factor.
    pub fn k(&self) -> f64 {
        self.mu * self.kappa / (self.mu * self.kappa + self.m)
    }

    /// Negative-binomial mixture weights, truncated once the tail is below 1e-13.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same shape with a different average SNR.
    pub fn with_gamma_bar(&self, gamma_bar: f64) -> Result<Self> {
        positive("gamma_bar_r", gamma_bar)?;
        Ok(Self { gamma_bar, ..self.clone() })
    }

    /// `E[t^w]` for real `w > −μ`.
    pub fn t_moment(&self, w: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, wn)| wn * (ln_gamma(self.mu + n as f64 + w) - ln_gamma(self.mu + n as f64)).exp())
            .sum()
    }

    /// `ln Σ_n w_n Γ(μ+n+w)/Γ(μ+n)` for complex `w` off the poles.
    pub fn ln_mixture_moment(&self, w: Complex64) -> Complex64 {
        let lead = ln_gamma_complex_unchecked(self.mu + w) - ln_gamma(self.mu);
        let mut rho = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, wn) in self.weights.iter().enumerate() {
            acc += *wn * rho;
            let a = self.mu + n as f64;
            rho *= (a + w) / a;
        }
        lead + acc.ln()
    }

    /// `ln E[γ_r^s]`.
    pub fn ln_snr_moment(&self, s: Complex64) -> Complex64 {
        s * self.snr_scale().ln() + self.ln_mixture_moment(2.0 * s / self.alpha)
    }

    /// `γ̄_r c^{2/α}`: the SNR is this times `t^{2/α}`.
    pub fn snr_scale(&self) -> f64 {
        self.gamma_bar * self.c.powf(2.0 / self.alpha)
    }

    /// `ln` of the density of `t`.
    pub fn ln_pdf_t(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let k = self.k();
        let hyp = if k == 0.0 { 0.0 } else { ln_hyp1f1(self.m, self.mu, k * t)? };
        Ok(self.m * (1.0 - k).ln() - ln_gamma(self.mu) + (self.mu - 1.0) * t.ln() - t + hyp)
    }

    fn t_of_snr(&self, gamma: f64) -> f64 {
        (gamma / self.gamma_bar).powf(self.alpha / 2.0) / self.c
    }
}

fn mixture_weights(k: f64, m: f64) -> Result<Vec<f64>> {
    let mut w = m * (1.0 - k).ln();
    let mut out = vec![w.exp()];
    if k == 0.0 {
        return Ok(out);
    }
    let mut total = out[0];
    let lk = k.ln();
    for n in 0..MAX_MIXTURE_TERMS {
        let nf = n as f64;
        w += ((m + nf) / (nf + 1.0)).ln() + lk;
        let wn = w.exp();
        out.push(wn);
        total += wn;
        // past the mode, the tail is bounded by the last term times a geometric factor
        let ratio = (m + nf + 1.0) / (nf + 2.0) * k;
        if ratio < 1.0 && wn * ratio / (1.0 - ratio) < MIXTURE_TAIL && 1.0 - total < 1e-10 {
            return Ok(out);
        }
    }
    Err(Error::SeriesNotConverged { partial: total, last_term: w.exp(), terms: MAX_MIXTURE_TERMS })
}

/// Envelope density of `|h_fr|` (unit mean power).
pub fn pdf_alpha_kms(p: &RfFadingParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("envelope must be positive, got {r}")));
    }
    let w = r * r;
    let t = w.powf(p.alpha / 2.0) / p.c;
    let dt_dw = p.alpha / 2.0 * t / w;
    Ok((p.ln_pdf_t(t)?).exp() * dt_dw * 2.0 * r)
}

/// SNR density from the closed form in `₁F₁`.
pub fn pdf_snr_rf_elementary(p: &RfFadingParams, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {gamma}")));
    }
    let t = p.t_of_snr(gamma);
    Ok((p.ln_pdf_t(t)?).exp() * p.alpha / 2.0 * t / gamma)
}

/// SNR density as a product of two Meijer G-functions: `G^{1,0}_{0,1}` for the
/// exponential and `G^{1,1}_{1,2}` at a negative argument for `₁F₁`.
pub fn pdf_snr_rf(p: &RfFadingParams, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("SNR must be positive, got {gamma}")));
    }
    let (a, mu, m, k, c) = (p.alpha, p.mu, p.m, p.k(), p.c);
    let t = p.t_of_snr(gamma);
    let ratio = gamma / p.gamma_bar;
    let ln_pref = a.ln() + m * (1.0 - k).ln() - (2.0 * c.powf(mu) * p.gamma_bar).ln() - ln_gamma(mu)
        + (a * mu / 2.0 - 1.0) * ratio.ln();
    if k == 0.0 {
        let g_exp = meijer_g(&FoxHSpec::meijer(1, 0, &[], &[0.0])?, t)?.value;
        return Ok(ln_pref.exp() * g_exp);
    }
    // G^{1,0}_{0,1}(t) = e^{−t} is folded into the series scale, since the
    // hypergeometric factor alone overflows for large t
    let spec = FoxHSpec::meijer(1, 1, &[1.0 - m], &[0.0, 1.0 - mu])?;
    Ok(meijer_g_series_scaled(&spec, -k * t, ln_pref + ln_gamma(mu) - ln_gamma(m) - t)?)
}

/// `P(γ_r ≤ γ) = Σ_n w_n P(μ + n, t)`.
pub fn cdf_snr_rf(p: &RfFadingParams, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let t = p.t_of_snr(gamma);
    p.weights
        .iter()
        .enumerate()
        .map(|(n, w)| w * ln_gamma_p(p.mu + n as f64, t).exp())
        .sum::<f64>()
        .min(1.0)
}

/// Draw `|h_fr|`: shadowed line-of-sight power `ξ² ~ Gamma(m, 1/m)`, a Poisson
/// number of extra scatter components, a `Gamma(μ + N)` cluster power, then
/// the `α`-root transform.
pub fn sample_alpha_kms<R: Rng + ?Sized>(p: &RfFadingParams, rng: &mut R) -> f64 {
    let t = sample_t(p, rng);
    (p.c * t).powf(1.0 / p.alpha)
}

/// Draw `t`, the gamma-mixture variable.
pub fn sample_t<R: Rng + ?Sized>(p: &RfFadingParams, rng: &mut R) -> f64 {
    let rate = p.mu * p.kappa;
    let extra = if rate > 0.0 {
        let xi2 = Gamma::new(p.m, 1.0 / p.m).expect("validated shape").sample(rng);
        let lambda = rate * xi2;
        if lambda > 0.0 {
            Poisson::new(lambda).expect("positive rate").sample(rng)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Gamma::new(p.mu + extra, 1.0).expect("validated shape").sample(rng)
}

/// Draw `γ_r = γ̄_r |h_fr|²`.
pub fn sample_snr_rf<R: Rng + ?Sized>(p: &RfFadingParams, rng: &mut R) -> f64 {
    p.snr_scale() * sample_t(p, rng).powf(2.0 / p.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quad::{integrate, integrate_log_axis};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig_set(gb: f64) -> RfFadingParams {
        RfFadingParams::new(1.8, 4.0, 2.0, 2.0, gb).unwrap()
    }

    #[test]
    fn unit_mean_power() {
        let p = fig_set(1.0);
        assert_relative_eq!(p.t_moment(2.0 / 1.8) * p.c().powf(2.0 / 1.8), 1.0, max_relative = 1e-13);
        let w: f64 = p.weights().iter().sum();
        assert!((1.0 - w).abs() < 1e-10);
        let r = integrate_log_axis(|r| r * r * pdf_alpha_kms(&p, r).unwrap(), 1e-8, 1e3, 1e-10).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn meijer_form_equals_elementary_form() {
        let p = fig_set(10.0);
        for i in 0..50 {
            let g = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0) * 10.0;
            let a = pdf_snr_rf(&p, g).unwrap();
            let b = pdf_snr_rf_elementary(&p, g).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8);
            // envelope change of variables
            let r = (g / 10.0).sqrt();
            let c = pdf_alpha_kms(&p, r).unwrap() / (2.0 * (g * 10.0).sqrt());
            assert_relative_eq!(c, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn densities_normalise() {
        let p = fig_set(3.0);
        let r = integrate_log_axis(|g| pdf_snr_rf_elementary(&p, g).unwrap(), 1e-10, 1e4, 1e-10).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-8);
        let r = integrate(|x| pdf_alpha_kms(&p, x).unwrap_or(0.0), 0.0, 8.0, 1e-12, 1e-11).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn rayleigh_limit() {
        // α = 2, κ → 0, μ = 1: exponential SNR
        let p = RfFadingParams::new(2.0, 1e-8, 1.0, 1e6, 5.0).unwrap();
        for &g in &[0.1, 1.0, 5.0, 20.0] {
            let e = (-g / 5.0_f64).exp() / 5.0;
            assert_relative_eq!(pdf_snr_rf(&p, g).unwrap(), e, max_relative = 1e-4);
        }
        assert_relative_eq!(p.c(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn cdf_is_the_integral_of_the_pdf() {
        let p = fig_set(2.0);
        for &g in &[0.05, 0.5, 2.0, 9.0] {
            let r = integrate(|x| pdf_snr_rf_elementary(&p, x).unwrap_or(0.0), 0.0, g, 1e-13, 1e-11).unwrap();
            assert_relative_eq!(cdf_snr_rf(&p, g), r.value, max_relative = 1e-8);
        }
    }

    #[test]
    fn complex_moment_matches_real_moment() {
        let p = fig_set(4.0);
        let s = 0.7;
        let z = p.ln_snr_moment(Complex64::new(s, 0.0)).exp();
        let direct = p.snr_scale().powf(s) * p.t_moment(2.0 * s / p.alpha());
        assert_relative_eq!(z.re, direct, max_relative = 1e-12);
        assert_relative_eq!(p.ln_snr_moment(Complex64::new(1.0, 0.0)).exp().re, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn sampler_is_deterministic_and_unit_power() {
        let p = fig_set(1.0);
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let xa: Vec<f64> = (0..10).map(|_| sample_alpha_kms(&p, &mut a)).collect();
        let xb: Vec<f64> = (0..10).map(|_| sample_alpha_kms(&p, &mut b)).collect();
        assert_eq!(xa, xb);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sample_alpha_kms(&p, &mut a).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }
}
