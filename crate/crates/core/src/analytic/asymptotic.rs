//! High-SNR asymptotes of the outage probability and the average BER.
//!
//! Closing the `s` contour of the correction integral to the left picks up the
//! pole of `Γ(s+v)` at `s = −v` and the first RF moment pole at `s = −α_rμ_r/2`.
//! The first leaves the single integral of
//!
//! ```text
//! A(v) = E[γ_r^{−v}] E[γ_t^{−v}] C^v K(v) / v
//! ```
//!
//! whose residues to the right at `α_tμ_t/2`, `φ/2` and `α_rμ_r/2` give the three
//! branches. The second is a line integral in `v` times `K(α_rμ_r/2)` and joins the
//! RF-only leading term in the last branch. `K(v)` is `γ_th^v` for outage and
//! `Γ(p+v) q^{−v} / (2Γ(p))` for the BER.
//!
//! The further poles `s = −v − k` of `Γ(s+v)` and the next fading poles give
//! terms of intermediate order. Everything up to two units above the diversity
//! order is kept and booked to the branch its pole belongs to.
//!
//! Residues are read off by trapezoid sums on circles, which covers the
//! higher-order poles of the non-zero boresight series and merged branches alike.

use num_complex::Complex64;

use super::{ModulationParams, SystemModel};
use crate::channels::thz::ln_snr_moment_term;
use crate::channels::MAX_SERIES_TERMS;
use crate::error::{Error, Result};
use crate::specfun::contour::{best_abscissa, integrate_line, QuadOptions};
use crate::specfun::gamma::{ln_gamma, ln_gamma_complex_unchecked as lgc, ln_gamma_signed};
use crate::specfun::residue::circle_residue;

/// Branches closer than this are treated as one cluster.
const CLUSTER_GAP: f64 = 1e-4;
/// Terms are kept up to this far above the diversity order.
const EXPANSION_DEPTH: f64 = 2.0;

/// Metric an asymptote is taken for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Outage { gamma_th: f64 },
    Ber(ModulationParams),
}

impl Metric {
    fn validate(&self) -> Result<()> {
        match *self {
            Metric::Outage { gamma_th } if !(gamma_th > 0.0 && gamma_th.is_finite()) => {
                Err(Error::Domain(format!("threshold must be positive, got {gamma_th}")))
            }
            Metric::Ber(m) => ModulationParams::new(m.p, m.q).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// `ln K(v)`.
    fn ln_kernel(&self, v: Complex64) -> Complex64 {
        match *self {
            Metric::Outage { gamma_th } => v * gamma_th.ln(),
            Metric::Ber(m) => lgc(m.p + v) - v * m.q.ln() - (2.0 * ln_gamma(m.p).exp()).ln(),
        }
    }

    fn kernel(&self, v: f64) -> f64 {
        self.ln_kernel(Complex64::new(v, 0.0)).exp().re
    }

    fn zeta(&self, b: f64) -> f64 {
        match *self {
            Metric::Outage { .. } => 1.0,
            Metric::Ber(m) => ln_gamma(m.p + b).exp(),
        }
    }

    fn varphi(&self, a_t: f64) -> f64 {
        match *self {
            Metric::Outage { gamma_th } => gamma_th.powf(a_t),
            Metric::Ber(m) => m.q.powf(-a_t) / (2.0 * ln_gamma(m.p).exp()),
        }
    }
}

/// The asymptote `Ψ^∞ = G0 (G1 + G2 + G3)`.
///
/// `G1`, `G2` and `G3` are the `α_tμ_t/2`, `φ/2` and `α_rμ_r/2` branches, each
/// carrying its `ζ` factor; `G0 = varphi`. For outage all `ζ` are one and
/// `varphi = γ_th^{α_tμ_t/2}`; for the BER `ζ` is `Γ(p + branch exponent)` and
/// `varphi = q^{−α_tμ_t/2} / (2Γ(p))`. `zeta[3]` belongs to the RF-only part of `G3`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticTerms {
    pub metric: Metric,
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub zeta: [f64; 4],
    pub varphi: f64,
}

impl AsymptoticTerms {
    pub fn value(&self) -> f64 {
        self.g0 * (self.g1 + self.g2 + self.g3)
    }
}

/// `ln E[γ_t^{−v}]` with the pointing series summed in closed form.
fn ln_thz_moment(sys: &SystemModel, v: Complex64) -> Complex64 {
    let (thz, pt) = (&sys.thz, &sys.pt);
    let phi = pt.phi();
    -v * thz.snr_scale(pt).ln() + lgc(thz.mu() - 2.0 * v / thz.alpha()) - ln_gamma(thz.mu()) + phi.ln()
        - (phi - 2.0 * v).ln()
        + pt.lambda() * v / (phi - 2.0 * v)
}

/// `1/Γ(x)` for real `x`, zero at the poles.
fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        return 0.0;
    }
    match ln_gamma_signed(x) {
        Ok((l, sign)) => sign * (-l).exp(),
        Err(_) => 0.0,
    }
}

/// Which branch a pole belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Branch {
    Thz,
    Pointing,
    Rf,
}

/// Poles of one family within `CLUSTER_GAP` of each other.
struct Cluster {
    branches: Vec<Branch>,
    lo: f64,
    hi: f64,
}

fn clusters(mut poles: Vec<(f64, Branch)>) -> Vec<Cluster> {
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Cluster> = Vec::new();
    for (x, br) in poles {
        match out.last_mut() {
            Some(c) if x - c.hi < CLUSTER_GAP => {
                c.branches.push(br);
                c.hi = x;
            }
            _ => out.push(Cluster { branches: vec![br], lo: x, hi: x }),
        }
    }
    out
}

/// Shape of the problem: branch exponents and the `v` abscissa every stage shares.
struct Layout {
    a_t: f64,
    b_phi: f64,
    a_r: f64,
    /// Every term with an exponent up to this is kept.
    top: f64,
    sigma_v: f64,
}

impl Layout {
    fn thz_poles(&self, sys: &SystemModel) -> impl Iterator<Item = f64> + '_ {
        let step = sys.thz.alpha() / 2.0;
        (0..).map(move |j| self.a_t + j as f64 * step).take_while(|b| *b <= self.top + 2.0)
    }

    /// Poles `α_rμ_r/2 + nα_r/2` of the RF moment, shifted by `−k`.
    fn rf_poles(&self, sys: &SystemModel, k: usize) -> impl Iterator<Item = f64> + '_ {
        let step = sys.rf.alpha() / 2.0;
        (0..).map(move |n| self.a_r - k as f64 + n as f64 * step).take_while(|b| *b <= self.top + 2.0)
    }
}

/// `ln` of the `k`-th family integrand: the `s = −v − k` residue of the correction
/// integral, `E[γ_r^{−v−k}] K(v+k) C^v E[γ_t^{−v}] (v+1)_{k−1} / k!`, with the THz
/// moment given by `thz`.
fn ln_family(sys: &SystemModel, metric: &Metric, k: usize, v: Complex64, thz: Complex64) -> Complex64 {
    let mut poly = if k == 0 { -v.ln() } else { -ln_gamma(k as f64 + 1.0) + Complex64::new(0.0, 0.0) };
    for i in 1..k {
        poly += (v + i as f64).ln();
    }
    sys.rf.ln_snr_moment(-v - k as f64) + metric.ln_kernel(v + k as f64) + v * sys.relay.c.ln() + thz + poly
}

/// Residue sum of the `k`-th family over one cluster, taken with the contour closed to the right.
fn cluster_contribution(
    sys: &SystemModel,
    metric: &Metric,
    k: usize,
    cl: &Cluster,
    singular: &[f64],
) -> Result<f64> {
    let pt = &sys.pt;
    let centre = 0.5 * (cl.lo + cl.hi);
    let half = 0.5 * (cl.hi - cl.lo);
    let reach = singular
        .iter()
        .map(|x| (x - centre).abs())
        .filter(|d| *d > half + CLUSTER_GAP)
        .fold(f64::INFINITY, f64::min);
    if !(reach > half) {
        return Err(Error::ContourInfeasible(format!("no residue circle isolates the pole at {centre}")));
    }
    let radius = (half + 0.5 * (reach - half)).min(half + 0.5);
    let c = Complex64::new(centre, 0.0);

    if !cl.branches.contains(&Branch::Pointing) || pt.zero_boresight() {
        let r = circle_residue(|v| ln_family(sys, metric, k, v, ln_thz_moment(sys, v)), c, radius, 64)?;
        return Ok(-r.re);
    }
    // the pointing series has a pole of order j + 1 at φ/2 in its j-th term
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for j in 0..MAX_SERIES_TERMS {
        let nodes = (2 * (j + 1) + 64).next_power_of_two();
        let term = -circle_residue(
            |v| ln_family(sys, metric, k, v, ln_snr_moment_term(&sys.thz, pt, -v, j)),
            c,
            radius,
            nodes,
        )?
        .re;
        sum += term;
        if j >= pt.series_terms.min(4) && term.abs() <= 1e-13 * sum.abs() && term.abs() <= prev {
            return Ok(sum);
        }
        prev = term.abs();
    }
    Err(Error::SeriesNotConverged { partial: sum, last_term: prev, terms: MAX_SERIES_TERMS })
}

/// `(1/2πi) ∫ Γ(v−b) Γ(v)Γ(1−v)/Γ(1+v) C^v E[γ_t^{−v}] dv` on the shared abscissa:
/// what the `s = −b` RF pole leaves of the correction integral.
fn rf_pole_line(sys: &SystemModel, b: f64, sigma_v: f64, opts: &QuadOptions) -> Result<f64> {
    let ln_c = sys.relay.c.ln();
    let ln_f = |v: Complex64| lgc(v - b) + lgc(v) + lgc(1.0 - v) - lgc(1.0 + v) + v * ln_c + ln_thz_moment(sys, v);
    let ev = integrate_line(ln_f, sigma_v, opts)?;
    ev.check_real()?;
    Ok(ev.value)
}

fn layout(sys: &SystemModel) -> Result<Layout> {
    let (rf, thz, pt) = (&sys.rf, &sys.thz, &sys.pt);
    let a_t = thz.alpha() * thz.mu() / 2.0;
    let b_phi = pt.phi() / 2.0;
    let a_r = rf.alpha() * rf.mu() / 2.0;
    let top = a_t.min(b_phi).min(a_r) + EXPANSION_DEPTH + 1e-9;
    let hi = 1f64.min(a_t).min(b_phi).min(a_r);
    let rf_line_poles: Vec<f64> = {
        let step = rf.alpha() / 2.0;
        (0..).map(|n| a_r + n as f64 * step).take_while(|b| *b <= top).collect()
    };
    let sigma_v = best_abscissa(0.0, hi, |x| {
        let clash = rf_line_poles.iter().any(|b| {
            let k = (b - x).round();
            k >= 0.0 && (x - (b - k)).abs() < 0.02 * hi.min(1.0)
        });
        if clash {
            return f64::INFINITY;
        }
        let v = Complex64::new(x, 0.0);
        (lgc(v - a_r) + lgc(v) + lgc(1.0 - v) - lgc(1.0 + v) + v * sys.relay.c.ln() + ln_thz_moment(sys, v)).re
    })?;
    Ok(Layout { a_t, b_phi, a_r, top, sigma_v })
}

/// The branch terms of the high-SNR asymptote, with every pole whose exponent
/// lies within `EXPANSION_DEPTH` of the diversity order. A branch beyond that
/// depth is left at zero.
pub fn asymptotic_terms(sys: &SystemModel, metric: Metric, opts: &QuadOptions) -> Result<AsymptoticTerms> {
    metric.validate()?;
    let rf = &sys.rf;
    let lay = layout(sys)?;
    let mut parts = [0.0; 3];
    let slot = |b: Branch| match b {
        Branch::Thz => 0,
        Branch::Pointing => 1,
        Branch::Rf => 2,
    };

    // families from the poles s = −v − k of Γ(s+v)
    let mut k = 0;
    while k as f64 + lay.sigma_v < lay.top {
        let room = lay.top - k as f64;
        let mut poles: Vec<(f64, Branch)> = lay.thz_poles(sys).filter(|b| *b <= room).map(|b| (b, Branch::Thz)).collect();
        if lay.b_phi <= room {
            poles.push((lay.b_phi, Branch::Pointing));
        }
        poles.extend(lay.rf_poles(sys, k).filter(|b| *b > lay.sigma_v && *b <= room).map(|b| (b, Branch::Rf)));
        let mut singular: Vec<f64> = vec![0.0];
        singular.extend(lay.thz_poles(sys));
        singular.push(lay.b_phi);
        singular.extend(lay.rf_poles(sys, k));
        if let Metric::Ber(m) = metric {
            singular.push(-m.p - k as f64);
        }
        for cl in clusters(poles) {
            let mut kinds = cl.branches.clone();
            kinds.sort();
            kinds.dedup();
            if kinds.len() > 1 {
                log::warn!("coincident poles {kinds:?} at {:.6}; taking their joint residue", cl.lo);
            }
            let owner = slot(kinds[0]);
            parts[owner] += cluster_contribution(sys, &metric, k, &cl, &singular)?;
        }
        k += 1;
    }

    // RF moment poles s = −b: the RF-only leading terms and what they leave of the correction
    let step = rf.alpha() / 2.0;
    let mut b = lay.a_r;
    while b <= lay.top {
        let res = circle_residue(|s| rf.ln_snr_moment(s), Complex64::new(-b, 0.0), 0.5 * step.min(b), 64)?.re;
        let kb = metric.kernel(b);
        parts[2] += res * kb * (1.0 / b + rgamma(1.0 - b) * rf_pole_line(sys, b, lay.sigma_v, opts)?);
        b += step;
    }

    let varphi = metric.varphi(lay.a_t);
    Ok(AsymptoticTerms {
        metric,
        g0: varphi,
        g1: parts[0] / varphi,
        g2: parts[1] / varphi,
        g3: parts[2] / varphi,
        zeta: [metric.zeta(lay.a_t), metric.zeta(lay.b_phi), metric.zeta(lay.a_r), metric.zeta(lay.a_r)],
        varphi,
    })
}

/// High-SNR asymptote of the outage probability or the average BER.
///
/// Below the high-SNR regime the branch sum can turn negative; that is reported
/// as a domain error rather than clamped.
pub fn asymptotic_psi(sys: &SystemModel, metric: Metric, opts: &QuadOptions) -> Result<f64> {
    let v = asymptotic_terms(sys, metric, opts)?.value();
    if !v.is_finite() {
        return Err(Error::NumericalHealth(format!("asymptote evaluated to {v}")));
    }
    if v < 0.0 {
        return Err(Error::Domain(format!("asymptote {v:e} is negative: SNR too low for the expansion")));
    }
    Ok(v)
}

/// `min{α_r μ_r, α_t μ_t, φ} / 2`.
pub fn diversity_order(sys: &SystemModel) -> f64 {
    (sys.rf.alpha() * sys.rf.mu()).min(sys.thz.alpha() * sys.thz.mu()).min(sys.pt.phi()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{average_ber, outage_probability, AnalyticOptions};
    use crate::channels::{PointingParams, RfFadingParams, ThzFadingParams};

    fn model(alpha_t: f64, mu_t: f64, sigma: f64, s: f64, gbar_db: f64) -> SystemModel {
        let g = 10f64.powf(gbar_db / 10.0);
        let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, g).unwrap();
        let thz = ThzFadingParams::new(alpha_t, mu_t, 1.0, g).unwrap();
        let pt = PointingParams::from_aperture(0.1, 0.6087, s, sigma).unwrap();
        SystemModel::semi_blind(rf, thz, pt).unwrap()
    }

    fn gamma_th() -> f64 {
        10f64.powf(0.4)
    }

    #[test]
    fn outage_and_ber_asymptotes_track_the_exact_values() {
        let opts = AnalyticOptions { cross_check: false, ..Default::default() };
        let m = ModulationParams::default();
        for (mu_t, sigma) in [(1.2, 0.15), (2.4, 0.15), (1.2, 0.05)] {
            let sys = model(1.5, mu_t, sigma, 0.1414, 60.0);
            let a = asymptotic_psi(&sys, Metric::Outage { gamma_th: gamma_th() }, &opts.quad).unwrap();
            let e = outage_probability(&sys, gamma_th(), &opts).unwrap().value;
            assert!((a / e - 1.0).abs() < 1e-4, "outage mu_t={mu_t} sigma={sigma}: {a} vs {e}");
            let a = asymptotic_psi(&sys, Metric::Ber(m), &opts.quad).unwrap();
            let e = average_ber(&sys, m, &opts).unwrap().value;
            assert!((a / e - 1.0).abs() < 1e-4, "ber mu_t={mu_t} sigma={sigma}: {a} vs {e}");
        }
    }

    #[test]
    fn ratio_closes_in_on_one_with_snr() {
        let opts = AnalyticOptions { cross_check: false, ..Default::default() };
        let mut last = f64::INFINITY;
        for db in [40.0, 50.0, 60.0] {
            let sys = model(2.6, 1.2, 0.05, 0.1414, db);
            let a = asymptotic_psi(&sys, Metric::Outage { gamma_th: gamma_th() }, &opts.quad).unwrap();
            let gap = (a / outage_probability(&sys, gamma_th(), &opts).unwrap().value - 1.0).abs();
            assert!(gap < last, "{db} dB: {gap} after {last}");
            last = gap;
        }
    }

    #[test]
    fn rf_branch_is_the_next_order_of_the_outage() {
        // α_tμ_t/2 = 0.75 leads and α_rμ_r/2 = 1.2 follows with nothing else in between
        let opts = AnalyticOptions { cross_check: false, ..Default::default() };
        let g = 1e10;
        let rf = RfFadingParams::new(2.0, 4.0, 1.2, 2.0, g).unwrap();
        let thz = ThzFadingParams::new(3.0, 0.5, 1.0, g).unwrap();
        let pt = PointingParams::from_aperture(0.1, 0.6087, 0.0, 0.05).unwrap();
        let sys = SystemModel::semi_blind(rf, thz, pt).unwrap();
        let t = asymptotic_terms(&sys, Metric::Outage { gamma_th: gamma_th() }, &opts.quad).unwrap();
        let e = outage_probability(&sys, gamma_th(), &opts).unwrap().value;
        assert_eq!(t.g2, 0.0);
        assert!(t.g3 < 0.0);
        let rest = (e - t.g0 * t.g1) / (t.g0 * t.g3);
        assert!((rest - 1.0).abs() < 1e-5, "{rest}");
    }

    #[test]
    fn pointing_branch_leads_for_wide_jitter() {
        let opts = AnalyticOptions { cross_check: false, ..Default::default() };
        for s in [0.0, 0.1414] {
            let sys = model(1.5, 1.2, 0.6, s, 60.0);
            assert!(diversity_order(&sys) < 0.15);
            let t = asymptotic_terms(&sys, Metric::Outage { gamma_th: gamma_th() }, &opts.quad).unwrap();
            let e = outage_probability(&sys, gamma_th(), &opts).unwrap().value;
            assert!(t.g2.abs() > 100.0 * t.g1.abs());
            assert!((t.value() / e - 1.0).abs() < 1e-4, "s={s}: {} vs {e}", t.value());
        }
    }

    #[test]
    fn metric_factors() {
        let sys = model(1.5, 1.2, 0.15, 0.1414, 40.0);
        let opts = QuadOptions::default();
        let t = asymptotic_terms(&sys, Metric::Outage { gamma_th: gamma_th() }, &opts).unwrap();
        assert_eq!(t.zeta, [1.0; 4]);
        assert!((t.varphi - gamma_th().powf(0.9)).abs() < 1e-14);
        assert_eq!(t.g0, t.varphi);
        let m = ModulationParams::new(1.5, 0.7).unwrap();
        let t = asymptotic_terms(&sys, Metric::Ber(m), &opts).unwrap();
        // Γ(p + branch exponent) per branch: 0.9, φ/2 and 1.8
        assert!((t.zeta[0] - ln_gamma(2.4).exp()).abs() < 1e-13);
        assert!((t.zeta[1] - ln_gamma(1.5 + sys.pt.phi() / 2.0).exp()).abs() < 1e-12);
        assert!((t.zeta[2] - ln_gamma(3.3).exp()).abs() < 1e-13);
        assert!((t.varphi - 0.7f64.powf(-0.9) / (2.0 * ln_gamma(1.5).exp())).abs() < 1e-14);
        assert!(asymptotic_psi(&sys, Metric::Outage { gamma_th: -1.0 }, &opts).is_err());
    }

    #[test]
    fn diversity_order_examples() {
        let a = model(1.5, 1.2, 0.15, 0.1414, 30.0);
        assert!((a.pt.phi() - 4.1168).abs() < 0.01);
        assert!((diversity_order(&a) - 0.9).abs() < 1e-12);
        let b = model(1.5, 2.4, 0.15, 0.1414, 30.0);
        assert!((diversity_order(&b) - 1.8).abs() < 1e-12);
        // jitter chosen so that φ = 0.5
        let sigma = 0.6087 / (4.0 * 0.5f64).sqrt();
        let c = model(1.5, 1.2, sigma, 0.1414, 30.0);
        assert!((diversity_order(&c) - 0.25).abs() < 1e-12);
    }
}
