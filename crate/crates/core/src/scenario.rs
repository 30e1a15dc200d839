//! Reference configurations for the three evaluation scenarios.
//!
//! All use the RF set `{α_r = 1.8, κ_r, μ_r = 2, m_r}`, unit-power THz fading, a
//! 10 cm aperture with `w_zeq = 0.6087 m` and the semi-blind relay gain. In the
//! SNR sweeps both hops share the average SNR on the axis.

use crate::analytic::SystemModel;
use crate::channels::{PointingParams, RfFadingParams, ThzFadingParams};
use crate::error::Result;
use crate::linkbudget::{average_snrs, db_to_linear, LinkGeometry};

pub const APERTURE: f64 = 0.1;
pub const W_ZEQ: f64 = 0.6087;
/// Boresight displacement in meters.
pub const BORESIGHT: f64 = 0.1414;
/// Outage threshold, 4 dB.
pub const GAMMA_TH_DB: f64 = 4.0;

pub fn gamma_th() -> f64 {
    db_to_linear(GAMMA_TH_DB)
}

/// Model with both hops at `gbar_db`.
pub fn snr_model(rf: (f64, f64, f64, f64), thz: (f64, f64), s: f64, sigma: f64, gbar_db: f64) -> Result<SystemModel> {
    let g = db_to_linear(gbar_db);
    let rf = RfFadingParams::new(rf.0, rf.1, rf.2, rf.3, g)?;
    let thz = ThzFadingParams::new(thz.0, thz.1, 1.0, g)?;
    let pt = PointingParams::from_aperture(APERTURE, W_ZEQ, s, sigma)?;
    SystemModel::semi_blind(rf, thz, pt)
}

/// Outage sweep: `α_t = 1.5`, `μ_t ∈ {1.2, 2.4}`, `σ_s ∈ {5, 15} cm`.
pub fn outage_scenario(mu_t: f64, sigma: f64, gbar_db: f64) -> Result<SystemModel> {
    snr_model((1.8, 4.0, 2.0, 2.0), (1.5, mu_t), BORESIGHT, sigma, gbar_db)
}

/// BER sweep: `μ_t = 1.2`, `σ_s = 5 cm`, `α_t ∈ {1.4, 2.6}`.
pub fn ber_scenario(alpha_t: f64, gbar_db: f64) -> Result<SystemModel> {
    snr_model((1.8, 4.0, 2.0, 2.0), (alpha_t, 1.2), BORESIGHT, 0.05, gbar_db)
}

/// Capacity sweep over transmit power: `α_t = 2`, `μ_t = 2.2`, `σ_s = 10.6 cm`.
/// Both transmitters use `p_dbm`; the average SNRs come from the link budget.
pub fn capacity_scenario(p_dbm: f64, d_r: f64) -> Result<(SystemModel, LinkGeometry)> {
    let geom = LinkGeometry { d_r, p_r_dbm: p_dbm, p_t_dbm: p_dbm, ..LinkGeometry::default() };
    let (gr, gt) = average_snrs(&geom)?;
    let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, gr)?;
    let thz = ThzFadingParams::new(2.0, 2.2, 1.0, gt)?;
    let pt = PointingParams::from_aperture(APERTURE, W_ZEQ, BORESIGHT, 0.106)?;
    Ok((SystemModel::semi_blind(rf, thz, pt)?, geom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_build() {
        let a = outage_scenario(1.2, 0.15, 20.0).unwrap();
        assert!((a.pt.phi() - 4.1168).abs() < 1e-3);
        assert!((a.rf.gamma_bar() - 100.0).abs() < 1e-12);
        let b = ber_scenario(2.6, 40.0).unwrap();
        assert!((b.pt.phi() - 37.05).abs() < 0.01);
        let (c, g) = capacity_scenario(20.0, 200.0).unwrap();
        assert_eq!(g.p_t_dbm, 20.0);
        assert!(c.rf.gamma_bar() > 1.0 && c.thz.gamma_bar() > 1.0);
    }
}
