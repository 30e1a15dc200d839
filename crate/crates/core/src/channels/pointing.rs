//! Generalized (non-zero boresight) pointing-error model.
//!
//! The radial displacement `r` is Rician with offset `s` and jitter `σ`, and the
//! collected power fraction is `h_p = S0 exp(−2 r² / w_zeq²)`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::positive;
use crate::error::{Error, Result};
use crate::specfun::gamma::{erf, ln_gamma, ln_gamma_p};

/// Pointing-error parameters. Lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointingParams {
    pub s: f64,
    pub sigma: f64,
    pub w_zeq: f64,
    pub s0: f64,
    pub series_terms: usize,
}

impl PointingParams {
    pub fn new(s: f64, sigma: f64, w_zeq: f64, s0: f64) -> Result<Self> {
        let p = Self { s, sigma, w_zeq, s0, series_terms: 10 };
        p.validate()?;
        Ok(p)
    }

    /// Build from a circular aperture of radius `aperture` and the equivalent
    /// beamwidth, solving for the beam waist `w_z` behind `w_zeq`.
    pub fn from_aperture(aperture: f64, w_zeq: f64, s: f64, sigma: f64) -> Result<Self> {
        positive("aperture", aperture)?;
        positive("w_zeq", w_zeq)?;
        let wz = beam_waist_for(aperture, w_zeq)?;
        let v = std::f64::consts::PI.sqrt() * aperture / (std::f64::consts::SQRT_2 * wz);
        Self::new(s, sigma, w_zeq, erf(v).powi(2))
    }

    pub fn with_series_terms(mut self, terms: usize) -> Result<Self> {
        self.series_terms = terms;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s >= 0 violated: s = {}", self.s)));
        }
        positive("sigma", self.sigma)?;
        positive("w_zeq", self.w_zeq)?;
        if !(self.s0 > 0.0 && self.s0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("0 < S0 <= 1 violated: S0 = {}", self.s0)));
        }
        if self.series_terms == 0 {
            return Err(Error::InvalidParameter("series_terms >= 1 violated".into()));
        }
        Ok(())
    }

    /// `φ = w_zeq² / (4σ²)`.
    pub fn phi(&self) -> f64 {
        self.w_zeq * self.w_zeq / (4.0 * self.sigma * self.sigma)
    }

    /// `λ = s²/σ²`.
    pub fn lambda(&self) -> f64 {
        (self.s / self.sigma).powi(2)
    }

    /// Series ratio `β = s² w_zeq² / (8σ⁴)`.
    pub fn beta(&self) -> f64 {
        self.lambda() * self.phi() / 2.0
    }

    /// Whether the boresight series collapses to its first term.
    pub fn zero_boresight(&self) -> bool {
        self.s == 0.0
    }
}

/// Equivalent beamwidth for a given waist: `w_zeq² = w_z² √π erf(v) / (2 v e^{−v²})`.
pub fn equivalent_beamwidth(aperture: f64, wz: f64) -> f64 {
    let v = std::f64::consts::PI.sqrt() * aperture / (std::f64::consts::SQRT_2 * wz);
    (wz * wz * std::f64::consts::PI.sqrt() * erf(v) / (2.0 * v * (-v * v).exp())).sqrt()
}

fn beam_waist_for(aperture: f64, w_zeq: f64) -> Result<f64> {
    // far-field branch v < 1, where w_zeq(w_z) is increasing; bisect in log space
    let (mut lo, mut hi) = ((aperture * (std::f64::consts::PI / 2.0).sqrt()).ln(), 1e6_f64.ln());
    let f = |lw: f64| equivalent_beamwidth(aperture, lw.exp()) - w_zeq;
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::InvalidParameter(format!("no beam waist gives w_zeq = {w_zeq}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// `ln I₀(z)` from the power series `Σ (z/2)^{2k} / (k!)²`.
pub fn ln_bessel_i0(z: f64) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 0.0;
    }
    let lh = (z / 2.0).ln();
    // terms peak near k ≈ z/2
    let kmax = (z / 2.0).floor();
    let peak = 2.0 * kmax * lh - 2.0 * ln_gamma(kmax + 1.0);
    let mut sum = 0.0;
    let mut k = 0.0;
    loop {
        let t = (2.0 * k * lh - 2.0 * ln_gamma(k + 1.0) - peak).exp();
        sum += t;
        if k > kmax && t < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    peak + sum.ln()
}

/// Density of `h_p` on `(0, S0]`.
pub fn pdf_pointing(p: &PointingParams, hp: f64) -> Result<f64> {
    if !(hp > 0.0 && hp <= p.s0) {
        return Err(Error::Domain(format!("h_p must lie in (0, S0], got {hp}")));
    }
    let phi = p.phi();
    let arg = p.s / (p.sigma * p.sigma) * (p.w_zeq * p.w_zeq * (p.s0 / hp).ln() / 2.0).sqrt();
    let ln = phi.ln() - p.lambda() / 2.0 - phi * p.s0.ln() + (phi - 1.0) * hp.ln() + ln_bessel_i0(arg);
    Ok(ln.exp())
}

/// `P(h_p ≤ h)` via the Poisson mixture of the non-central χ² law of `r²/σ²`.
pub fn cdf_pointing(p: &PointingParams, hp: f64) -> f64 {
    if hp <= 0.0 {
        return 0.0;
    }
    if hp >= p.s0 {
        return 1.0;
    }
    let rho = p.w_zeq * p.w_zeq / 2.0 * (p.s0 / hp).ln();
    let x = rho / (2.0 * p.sigma * p.sigma);
    let half = p.lambda() / 2.0;
    let mut below = 0.0;
    let mut j = 0.0;
    let mut mass = 0.0;
    loop {
        let w = if half == 0.0 {
            if j == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-half + j * half.ln() - ln_gamma(j + 1.0)).exp()
        };
        below += w * ln_gamma_p(1.0 + j, x).exp();
        mass += w;
        if (j > half && w < 1e-17) || 1.0 - mass < 1e-16 {
            break;
        }
        j += 1.0;
    }
    (1.0 - below).clamp(0.0, 1.0)
}

/// Draw `h_p` through the Rician displacement.
pub fn sample_pointing<R: Rng + ?Sized>(p: &PointingParams, rng: &mut R) -> f64 {
    let x: f64 = p.s + p.sigma * rng.sample::<f64, _>(StandardNormal);
    let y: f64 = p.sigma * rng.sample::<f64, _>(StandardNormal);
    p.s0 * (-2.0 * (x * x + y * y) / (p.w_zeq * p.w_zeq)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quad::integrate;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phi_matches_the_two_jitter_settings() {
        let a = PointingParams::new(0.0, 0.05, 0.6087, 1.0).unwrap();
        assert!((a.phi() - 37.05).abs() < 0.01);
        let b = PointingParams::new(0.0, 0.15, 0.6087, 1.0).unwrap();
        assert!((b.phi() - 4.1168).abs() < 0.01);
    }

    #[test]
    fn aperture_construction_round_trips() {
        let p = PointingParams::from_aperture(0.1, 0.6087, 0.0, 0.05).unwrap();
        assert!(p.s0 > 0.0 && p.s0 < 0.1, "{}", p.s0);
        let wz = beam_waist_for(0.1, 0.6087).unwrap();
        assert_relative_eq!(equivalent_beamwidth(0.1, wz), 0.6087, max_relative = 1e-12);
    }

    #[test]
    fn zero_boresight_is_a_power_law() {
        let p = PointingParams::new(0.0, 0.05, 0.6087, 0.5).unwrap();
        let phi = p.phi();
        for h in [0.1_f64, 0.3, 0.5] {
            let e = phi / 0.5_f64.powf(phi) * h.powf(phi - 1.0);
            assert_relative_eq!(pdf_pointing(&p, h).unwrap(), e, max_relative = 1e-13);
        }
        assert_relative_eq!(pdf_pointing(&p, 0.5).unwrap(), phi / 0.5, max_relative = 1e-13);
        assert!(pdf_pointing(&p, 0.6).is_err());
    }

    #[test]
    fn bessel_series() {
        // mpmath.besseli(0, z)
        assert_relative_eq!(ln_bessel_i0(1.0).exp(), 1.266_065_877_752_008_4, max_relative = 1e-14);
        assert_relative_eq!(ln_bessel_i0(50.0), 47.127_575_501_871_8, max_relative = 1e-14);
    }

    #[test]
    fn density_normalises_and_matches_cdf() {
        let p = PointingParams::new(0.1, 0.05, 0.6087, 0.8).unwrap();
        let r = integrate(|h| pdf_pointing(&p, h).unwrap_or(0.0), 0.0, p.s0, 1e-13, 1e-11).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-6);
        for &h in &[0.2, 0.5, 0.7] {
            let r = integrate(|x| pdf_pointing(&p, x).unwrap_or(0.0), 0.0, h, 1e-14, 1e-11).unwrap();
            assert_relative_eq!(cdf_pointing(&p, h), r.value, epsilon = 1e-9);
        }
    }

    #[test]
    fn samples_stay_in_range() {
        let p = PointingParams::new(0.1, 0.05, 0.6087, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let h = sample_pointing(&p, &mut rng);
            assert!(h > 0.0 && h <= p.s0);
        }
    }
}
