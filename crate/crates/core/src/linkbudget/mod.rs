//! Path gains, average SNRs of both hops and the semi-blind relay gain constant.

use crate::channels::rf::{cdf_snr_rf, pdf_snr_rf_elementary, RfFadingParams};
use crate::error::{Error, Result};
use crate::specfun::quad::integrate_log_axis;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Link geometry and radio constants. Powers in dBm, gains in dBi.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub d_r: f64,
    pub f_r: f64,
    pub g_r_dbi: f64,
    pub d_t: f64,
    pub f_t: f64,
    pub g_t_dbi: f64,
    pub k_abs: f64,
    pub p_r_dbm: f64,
    pub p_t_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub b_r: f64,
    pub b_t: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            d_r: 100.0,
            f_r: 6e9,
            g_r_dbi: 26.0,
            d_t: 50.0,
            f_t: 0.275e12,
            g_t_dbi: 55.0,
            k_abs: 2.8e-4,
            p_r_dbm: 20.0,
            p_t_dbm: 20.0,
            noise_density_dbm_hz: -170.0,
            b_r: 20e6,
            b_t: 10e9,
        }
    }
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_r", self.d_r),
            ("f_r", self.f_r),
            ("d_t", self.d_t),
            ("f_t", self.f_t),
            ("b_r", self.b_r),
            ("b_t", self.b_t),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} > 0 violated: {name} = {v}")));
            }
        }
        if !(self.k_abs >= 0.0 && self.k_abs.is_finite()) {
            return Err(Error::InvalidParameter(format!("k_abs >= 0 violated: k_abs = {}", self.k_abs)));
        }
        for (name, v) in [
            ("g_r_dbi", self.g_r_dbi),
            ("g_t_dbi", self.g_t_dbi),
            ("p_r_dbm", self.p_r_dbm),
            ("p_t_dbm", self.p_t_dbm),
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// `L_r = 32.4 + 17.3 log₁₀ d_r + 20 log₁₀(f_r / 1 GHz)` in dB.
pub fn rf_path_loss_db(d_r: f64, f_r: f64) -> f64 {
    32.4 + 17.3 * d_r.log10() + 20.0 * (1e-9 * f_r).log10()
}

/// `H_t = c G_t / (4π f_t d_t) · exp(−k d_t / 2)`.
pub fn thz_path_gain(geom: &LinkGeometry) -> f64 {
    SPEED_OF_LIGHT * db_to_linear(geom.g_t_dbi) / (4.0 * std::f64::consts::PI * geom.f_t * geom.d_t)
        * (-0.5 * geom.k_abs * geom.d_t).exp()
}

/// Noise power in dBm over `bandwidth` Hz.
pub fn noise_power_dbm(noise_density_dbm_hz: f64, bandwidth: f64) -> f64 {
    noise_density_dbm_hz + 10.0 * bandwidth.log10()
}

/// Average SNRs `(γ̄_r, γ̄_t)` in linear units. The RF antenna gain enters once.
pub fn average_snrs(geom: &LinkGeometry) -> Result<(f64, f64)> {
    geom.validate()?;
    let rf_db = geom.p_r_dbm + geom.g_r_dbi - rf_path_loss_db(geom.d_r, geom.f_r)
        - noise_power_dbm(geom.noise_density_dbm_hz, geom.b_r);
    let thz_db = geom.p_t_dbm + 20.0 * thz_path_gain(geom).log10() - noise_power_dbm(geom.noise_density_dbm_hz, geom.b_t);
    Ok((db_to_linear(rf_db), db_to_linear(thz_db)))
}

/// How the fixed relay gain was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    SemiBlind,
    Explicit,
}

/// Fixed-gain relay constant `C` in linear SNR units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayParams {
    pub c: f64,
    pub gain_mode: GainMode,
}

impl RelayParams {
    pub fn explicit(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C > 0 violated: C = {c}")));
        }
        Ok(Self { c, gain_mode: GainMode::Explicit })
    }
}

/// `C = 1 / E[1/(1+γ_r)]` with the expectation by log-axis quadrature of the
/// SNR density. The mass below the lower cut is added as `F(lo)`.
pub fn semi_blind_c(rf: &RfFadingParams) -> Result<RelayParams> {
    let gb = rf.gamma_bar();
    let (lo, hi) = (gb * 1e-12, gb * 1e4);
    let body = integrate_log_axis(|g| pdf_snr_rf_elementary(rf, g).unwrap_or(0.0) / (1.0 + g), lo, hi, 1e-10)?;
    let mean = body.value + cdf_snr_rf(rf, lo) / (1.0 + lo);
    if !(mean > 0.0 && mean <= 1.0 + 1e-9) {
        return Err(Error::NumericalHealth(format!("E[1/(1+γ_r)] = {mean} outside (0, 1]")));
    }
    Ok(RelayParams { c: (1.0 / mean).max(1.0), gain_mode: GainMode::SemiBlind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rf_path_loss_values() {
        // 32.4 + 17.3·2 + 20·log10(6)
        assert_relative_eq!(rf_path_loss_db(100.0, 6e9), 82.563_025_007_672_87, max_relative = 1e-13);
        assert_relative_eq!(rf_path_loss_db(1.0, 6e9), 32.4 + 20.0 * 6f64.log10(), max_relative = 1e-14);
        assert_relative_eq!(
            rf_path_loss_db(200.0, 6e9) - rf_path_loss_db(100.0, 6e9),
            17.3 * 2f64.log10(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn thz_gain_values() {
        let g = LinkGeometry::default();
        // mpmath: 299792458·10^5.5/(4π·0.275e12·50)·exp(−0.007)
        assert_relative_eq!(thz_path_gain(&g), 0.544_838_864_775_273_0, max_relative = 1e-12);
        // with c rounded to 3e8 this is the quoted 0.5452
        assert!((thz_path_gain(&g) * 3e8 / SPEED_OF_LIGHT - 0.5452).abs() < 1e-4);
        let free = LinkGeometry { k_abs: 0.0, ..g.clone() };
        let far = LinkGeometry { d_t: 100.0, ..free.clone() };
        assert_relative_eq!(thz_path_gain(&far), thz_path_gain(&free) / 2.0, max_relative = 1e-14);
        assert!(thz_path_gain(&g) < thz_path_gain(&free));
    }

    #[test]
    fn noise_and_snrs() {
        assert_relative_eq!(noise_power_dbm(-170.0, 20e6), -96.989_700_043_360_19, max_relative = 1e-13);
        assert_relative_eq!(noise_power_dbm(-170.0, 10e9), -70.0, max_relative = 1e-14);
        let g = LinkGeometry::default();
        let (r, t) = average_snrs(&g).unwrap();
        let (r2, _) = average_snrs(&LinkGeometry { p_r_dbm: 30.0, ..g.clone() }).unwrap();
        assert_relative_eq!(r2 / r, 10.0, max_relative = 1e-12);
        assert_relative_eq!(linear_to_db(r), 20.0 + 26.0 - 82.563_025_007_672_87 + 96.989_700_043_360_19, max_relative = 1e-12);
        assert!(t > 0.0);
        assert!(average_snrs(&LinkGeometry { d_t: -1.0, ..g }).is_err());
    }

    #[test]
    fn db_round_trip() {
        for &x in &[1e-9, 0.3, 1.0, 7.5, 1e12] {
            assert_relative_eq!(db_to_linear(linear_to_db(x)), x, max_relative = 1e-12);
        }
    }

    #[test]
    fn semi_blind_constant() {
        let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, 1e-6).unwrap();
        let c = semi_blind_c(&rf).unwrap();
        assert!((c.c - 1.0).abs() < 1e-5);
        let mut prev = 1.0;
        for k in 0..10 {
            let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, db_to_linear(-10.0 + 6.0 * k as f64)).unwrap();
            let c = semi_blind_c(&rf).unwrap().c;
            assert!(c >= prev && c >= 1.0, "{k}: {c}");
            prev = c;
        }
    }

    #[test]
    fn semi_blind_matches_moment_series() {
        // E[1/(1+γ)] by a gamma-mixture quadrature in t, independent of the SNR density
        let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, 100.0).unwrap();
        let scale = rf.snr_scale();
        let mut mean = 0.0;
        for (n, w) in rf.weights().iter().enumerate() {
            let a = rf.mu() + n as f64;
            let r = crate::specfun::quad::integrate(
                |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    ((a - 1.0) * t.ln() - t - crate::specfun::gamma::ln_gamma(a)).exp()
                        / (1.0 + scale * t.powf(2.0 / rf.alpha()))
                },
                0.0,
                200.0 + 10.0 * a,
                1e-15,
                1e-12,
            )
            .unwrap();
            mean += w * r.value;
        }
        assert_relative_eq!(semi_blind_c(&rf).unwrap().c, 1.0 / mean, max_relative = 1e-8);
    }
}
