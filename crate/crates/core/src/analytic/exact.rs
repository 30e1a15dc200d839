//! Exact evaluators: the RF-only part in closed form or as a single contour
//! integral, plus the double-contour correction summed over the pointing series.

use num_complex::Complex64;
use std::f64::consts::LN_2;

use super::{AnalyticOptions, AnalyticValue, ModulationParams, SystemModel};
use crate::channels::rf::{cdf_snr_rf, pdf_snr_rf};
use crate::channels::thz::{ln_series_weight, ln_snr_moment_term, pdf_snr_thz};
use crate::channels::{SERIES_REL_TOL, MAX_SERIES_TERMS};
use crate::error::{Error, Result};
use crate::specfun::bivariate::FoxHBivariateSpec;
use crate::specfun::contour::{
    best_abscissa, best_abscissa_with_value, integrate_line, integrate_plane_lattice, LatticeIntegrand, QuadOptions,
    SeriesEvaluation,
};
use crate::specfun::gamma::{ln_gamma, ln_gamma_complex_unchecked as lgc};
use crate::specfun::quad::GaussLegendre;

/// Which functional of the end-to-end law the correction integral computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Transform {
    Cdf(f64),
    Pdf(f64),
    Ber(ModulationParams),
    Capacity,
}

impl Transform {
    /// Bounds on `Re s` added by the transform kernel.
    fn s_bounds(&self) -> (f64, f64) {
        match self {
            Transform::Cdf(_) | Transform::Pdf(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Transform::Ber(m) => (f64::NEG_INFINITY, m.p),
            Transform::Capacity => (0.0, 1.0),
        }
    }

    /// `ln` of the `s`-only factor multiplying `E[γ_r^s]`.
    fn ln_first(&self, s: Complex64) -> Complex64 {
        match *self {
            Transform::Cdf(z) => -lgc(1.0 + s) - s * z.ln(),
            Transform::Pdf(z) => -lgc(s) - s * z.ln(),
            Transform::Ber(m) => -lgc(1.0 + s) + lgc(m.p - s) + s * m.q.ln(),
            Transform::Capacity => -lgc(1.0 + s) + lgc(s) + lgc(1.0 - s),
        }
    }

    fn factor(&self) -> f64 {
        match *self {
            Transform::Cdf(_) => 1.0,
            Transform::Pdf(z) => -1.0 / z,
            Transform::Ber(m) => 0.5 / ln_gamma(m.p).exp(),
            Transform::Capacity => -1.0 / LN_2,
        }
    }

    /// Whether `σ` sits next to a zero of the `1/Γ` factor on the real axis.
    fn near_zero(&self, sigma: f64) -> bool {
        let last = if matches!(self, Transform::Pdf(_)) { 0.0 } else { -1.0 };
        let r = sigma.round();
        r <= last && (sigma - r).abs() < 0.1
    }
}

/// The correction integral with `j_terms` pointing-series terms, one entry per `j`.
pub(crate) fn correction(sys: &SystemModel, tr: Transform, j_terms: usize, opts: &QuadOptions) -> Result<SeriesEvaluation> {
    let (rf, thz, pt) = (&sys.rf, &sys.thz, &sys.pt);
    let v_hi = 1f64.min(thz.alpha() * thz.mu() / 2.0).min(pt.phi() / 2.0);
    let r_lo = -rf.alpha() * rf.mu() / 2.0;
    let ln_c = sys.relay.c.ln();
    let (t_lo, t_hi) = tr.s_bounds();

    let first = |s: Complex64| rf.ln_snr_moment(s) + tr.ln_first(s);
    let joint = |w: Complex64| lgc(w);
    let common = move |v: Complex64| lgc(v) + lgc(1.0 - v) - lgc(1.0 + v) + v * ln_c;
    let seconds: Vec<Box<dyn Fn(Complex64) -> Complex64 + Sync + '_>> = (0..j_terms)
        .map(|j| Box::new(move |v: Complex64| common(v) + ln_snr_moment_term(thz, pt, -v, j)) as Box<_>)
        .collect();

    // contour pair minimising the real-axis magnitude of the integrand
    let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
    for i in 0..24 {
        let sv = v_hi * (i as f64 + 0.5) / 24.0;
        let v = Complex64::new(sv, 0.0);
        let lb = seconds.iter().map(|g| g(v).re).fold(f64::NEG_INFINITY, |a, b| {
            let m = a.max(b);
            if m == f64::NEG_INFINITY {
                m
            } else {
                m + ((a - m).exp() + (b - m).exp()).ln()
            }
        });
        let lo = r_lo.max(-sv).max(t_lo);
        if lo >= t_hi || !lb.is_finite() {
            continue;
        }
        let (val, ss) = best_abscissa_with_value(lo, t_hi, |ss| {
            if tr.near_zero(ss) {
                return f64::INFINITY;
            }
            let s = Complex64::new(ss, 0.0);
            (first(s) + joint(s + v)).re
        })?;
        if val + lb < best.0 {
            best = (val + lb, ss, sv);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::ContourInfeasible("no admissible contour pair for the correction integral".into()));
    }
    let second: Vec<&(dyn Fn(Complex64) -> Complex64 + Sync)> = seconds.iter().map(|b| b.as_ref()).collect();
    let integrand = LatticeIntegrand { joint: &joint, a: 1.0, b: 1.0, first: &first, second };
    let mut out = integrate_plane_lattice(&integrand, best.1, best.2, opts)?;
    let f = tr.factor();
    for t in &mut out.terms {
        *t *= f;
    }
    out.imag *= f;
    out.error *= f.abs();
    out.l1 *= f.abs();
    Ok(out)
}

/// Pointing-series length from the real-axis bound of the `j` weights at the
/// largest admissible `Re v`: at least the configured count, then until the
/// next weight is below `1e-12` of the partial sum.
fn series_length(sys: &SystemModel) -> usize {
    let pt = &sys.pt;
    let v_hi = 1f64.min(sys.thz.alpha() * sys.thz.mu() / 2.0).min(pt.phi() / 2.0);
    let ratio = pt.beta() / (pt.phi() - 2.0 * v_hi);
    let mut term: f64 = 1.0;
    let mut sum = 0.0;
    for j in 0..MAX_SERIES_TERMS {
        sum += term;
        term *= ratio / (j + 1) as f64;
        if j + 1 >= pt.series_terms && term <= 1e-12 * sum {
            return j + 1;
        }
    }
    MAX_SERIES_TERMS
}

/// Correction with the pointing series extended until its last term is below
/// `SERIES_REL_TOL` of `|reference| + |correction|`.
fn correction_series(sys: &SystemModel, tr: Transform, reference: f64, opts: &QuadOptions) -> Result<(SeriesEvaluation, usize)> {
    if sys.pt.zero_boresight() {
        return Ok((correction(sys, tr, 1, opts)?, 1));
    }
    let mut j = series_length(sys);
    loop {
        let ev = correction(sys, tr, j, opts)?;
        let last = ev.terms.last().copied().unwrap_or(0.0).abs();
        let scale = reference.abs() + ev.total().abs();
        if last <= SERIES_REL_TOL * scale {
            return Ok((ev, j));
        }
        if j >= MAX_SERIES_TERMS {
            return Err(Error::SeriesNotConverged { partial: reference + ev.total(), last_term: last, terms: j });
        }
        j = (2 * j).min(MAX_SERIES_TERMS);
    }
}

fn checked_real(ev: &SeriesEvaluation) -> Result<()> {
    let bound = 1e-6 * ev.total().abs() + 1e-12 * ev.l1.max(1.0);
    if ev.imag.abs() > bound {
        return Err(Error::NotReal { real: ev.total(), imag: ev.imag });
    }
    Ok(())
}

/// End-to-end SNR density.
pub fn pdf_end_to_end(sys: &SystemModel, gamma: f64, opts: &AnalyticOptions) -> Result<AnalyticValue> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("SNR must be positive, got {gamma}")));
    }
    let fr = pdf_snr_rf(&sys.rf, gamma)?;
    let (d, terms) = correction_series(sys, Transform::Pdf(gamma), fr, &opts.quad)?;
    checked_real(&d)?;
    Ok(AnalyticValue { value: (fr + d.total()).max(0.0), error: d.error, series_terms: terms })
}

/// `P(γ < γ_th)`.
pub fn outage_probability(sys: &SystemModel, gamma_th: f64, opts: &AnalyticOptions) -> Result<AnalyticValue> {
    if !(gamma_th > 0.0 && gamma_th.is_finite()) {
        return Err(Error::Domain(format!("threshold must be positive, got {gamma_th}")));
    }
    let fr = cdf_snr_rf(&sys.rf, gamma_th);
    let (d, terms) = correction_series(sys, Transform::Cdf(gamma_th), fr, &opts.quad)?;
    checked_real(&d)?;
    let raw = fr + d.total();
    if !(-1e-6..=1.0 + 1e-6).contains(&raw) {
        return Err(Error::NumericalHealth(format!("outage {raw} outside [0, 1] beyond 1e-6")));
    }
    Ok(AnalyticValue { value: raw.clamp(0.0, 1.0), error: d.error, series_terms: terms })
}

/// `(1/2πi) ∫ f(s) ds` with the abscissa chosen inside `(lo, hi)`.
fn line(ln_f: impl Fn(Complex64) -> Complex64, lo: f64, hi: f64, opts: &QuadOptions) -> Result<f64> {
    let sigma = best_abscissa(lo, hi, |x| ln_f(Complex64::new(x, 0.0)).re)?;
    let ev = integrate_line(&ln_f, sigma, opts)?;
    ev.check_real()?;
    Ok(ev.value)
}

/// Average BER of the RF hop alone: `(1/2Γ(p)) (1/2πi) ∫ −E[γ_r^s]/s · Γ(p−s) q^s ds`.
fn ber_rf(sys: &SystemModel, m: ModulationParams, opts: &QuadOptions) -> Result<f64> {
    let rf = &sys.rf;
    let lo = -rf.alpha() * rf.mu() / 2.0;
    let ln_f = |s: Complex64| rf.ln_snr_moment(s) - (-s).ln() + lgc(m.p - s) + s * m.q.ln();
    Ok(0.5 / ln_gamma(m.p).exp() * line(ln_f, lo, 0.0, opts)?)
}

/// Ergodic capacity of the RF hop alone: `(1/ln 2)(1/2πi) ∫ E[γ_r^s] Γ(s)Γ(1−s)/s ds`.
fn capacity_rf(sys: &SystemModel, opts: &QuadOptions) -> Result<f64> {
    let rf = &sys.rf;
    let ln_f = |s: Complex64| rf.ln_snr_moment(s) + lgc(s) + lgc(1.0 - s) - s.ln();
    Ok(line(ln_f, 0.0, 1.0, opts)? / LN_2)
}

fn health(name: &str, closed: f64, fallback: f64, tol: f64) -> Result<()> {
    if (closed - fallback).abs() > tol * fallback.abs() {
        return Err(Error::NumericalHealth(format!(
            "{name}: closed form {closed:e} and quadrature {fallback:e} differ by more than {tol}"
        )));
    }
    Ok(())
}

/// Average BER `E[Γ(p, qγ)] / (2Γ(p))`.
pub fn average_ber(sys: &SystemModel, m: ModulationParams, opts: &AnalyticOptions) -> Result<AnalyticValue> {
    let r = ber_rf(sys, m, &opts.quad)?;
    let (d, terms) = correction_series(sys, Transform::Ber(m), r, &opts.quad)?;
    checked_real(&d)?;
    let value = r + d.total();
    if opts.cross_check {
        let fb = average_ber_by_quadrature(sys, m, opts)?;
        health("average BER", value, fb, opts.health_tol)?;
    }
    if !(value > 0.0 && value <= 0.5 + 1e-9) {
        return Err(Error::NumericalHealth(format!("average BER {value} outside (0, 0.5]")));
    }
    Ok(AnalyticValue { value: value.min(0.5), error: d.error, series_terms: terms })
}

/// Ergodic capacity in bits/s/Hz.
pub fn ergodic_capacity(sys: &SystemModel, opts: &AnalyticOptions) -> Result<AnalyticValue> {
    let r = capacity_rf(sys, &opts.quad)?;
    let (d, terms) = correction_series(sys, Transform::Capacity, r, &opts.quad)?;
    checked_real(&d)?;
    let value = r + d.total();
    if opts.cross_check {
        let fb = ergodic_capacity_by_quadrature(sys, opts)?;
        health("ergodic capacity", value, fb, opts.health_tol)?;
    }
    if value < 0.0 {
        return Err(Error::NumericalHealth(format!("negative capacity {value}")));
    }
    Ok(AnalyticValue { value, error: d.error, series_terms: terms })
}

/// `Σ` of `f(x) · x` over an 8-point Gauss rule in `ln x` on each decade,
/// walking outwards from `10^start` in direction `step` until a decade adds
/// less than `rel` of the running total.
fn decade_walk(f: &mut dyn FnMut(f64) -> Result<f64>, start: f64, step: f64, limit: f64, rel: f64) -> Result<f64> {
    let gl = GaussLegendre::new(8);
    let mut total = 0.0;
    let mut a = start;
    let mut quiet = 0;
    while quiet < 2 && (step > 0.0 && a < limit || step < 0.0 && a > limit) {
        let (ys, ws) = gl.composite(a.min(a + step), a.max(a + step), 1);
        let mut part = 0.0;
        for (y, w) in ys.iter().zip(&ws) {
            let x = 10f64.powf(*y);
            part += w * std::f64::consts::LN_10 * x * f(x)?;
        }
        total += part;
        quiet = if part.abs() <= rel * total.abs() { quiet + 1 } else { 0 };
        a += step;
    }
    Ok(total)
}

/// Average BER by quadrature of `q^p/(2Γ(p)) ∫ γ^{p−1} e^{−qγ} F_γ(γ) dγ`
/// against the outage probability.
pub fn average_ber_by_quadrature(sys: &SystemModel, m: ModulationParams, opts: &AnalyticOptions) -> Result<f64> {
    let norm = 0.5 / ln_gamma(m.p).exp();
    let mut f = |x: f64| -> Result<f64> {
        let cdf = outage_probability(sys, x / m.q, opts)?.value;
        Ok(norm * x.powf(m.p - 1.0) * (-x).exp() * cdf)
    };
    let top = (m.p + 60f64).log10().ceil();
    decade_walk(&mut f, top, -1.0, -30.0, 1e-6)
}

/// Ergodic capacity by quadrature of `∫ log₂(1+γ) f_γ(γ) dγ` against the end-to-end density.
pub fn ergodic_capacity_by_quadrature(sys: &SystemModel, opts: &AnalyticOptions) -> Result<f64> {
    let mut f = |g: f64| -> Result<f64> { Ok((1.0 + g).log2() * pdf_end_to_end(sys, g, opts)?.value) };
    let (gr, gt) = (sys.rf.gamma_bar(), sys.thz.snr_scale(&sys.pt));
    let centre = (gr * gt / (gt + sys.relay.c)).log10().floor();
    let up = decade_walk(&mut f, centre, 1.0, centre + 30.0, 1e-7)?;
    let down = decade_walk(&mut f, centre, -1.0, centre - 30.0, 1e-7)?;
    Ok(up + down)
}

/// `E_{γ_t}[F_{γ_r}(z (1 + C/γ_t))]` and its density counterpart by direct
/// quadrature over the THz SNR, with its density tabulated once.
pub struct ConditioningOracle<'a> {
    sys: &'a SystemModel,
    nodes: Vec<(f64, f64)>,
}

impl<'a> ConditioningOracle<'a> {
    /// Tabulate `f_{γ_t}` on one 16-point Gauss panel per decade over
    /// `[10^{-14}, 10^{4}] · K`, `K` the THz SNR scale.
    pub fn new(sys: &'a SystemModel) -> Result<Self> {
        let k = sys.thz.snr_scale(&sys.pt).log10();
        let gl = GaussLegendre::order16();
        let (ys, ws) = gl.composite(k - 14.0, k + 4.0, 18);
        let mut nodes = Vec::with_capacity(ys.len());
        for (y, w) in ys.iter().zip(&ws) {
            let g = 10f64.powf(*y);
            let f = pdf_snr_thz(&sys.thz, &sys.pt, g)?.value;
            nodes.push((g, w * std::f64::consts::LN_10 * g * f));
        }
        Ok(Self { sys, nodes })
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let c = self.sys.relay.c;
        self.nodes.iter().map(|(g, w)| w * cdf_snr_rf(&self.sys.rf, z * (1.0 + c / g))).sum()
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        let c = self.sys.relay.c;
        let mut acc = 0.0;
        for (g, w) in &self.nodes {
            let a = 1.0 + c / g;
            acc += w * a * crate::channels::rf::pdf_snr_rf_elementary(&self.sys.rf, z * a)?;
        }
        Ok(acc)
    }
}

/// Outage probability by the conditioning integral (independent of the contour machinery).
pub fn outage_by_conditioning(sys: &SystemModel, gamma_th: f64) -> Result<f64> {
    Ok(ConditioningOracle::new(sys)?.cdf(gamma_th))
}

/// The `(n, j)` piece of the distribution correction as a bivariate H-function:
/// `D_{n,j}(z) = coef · H[x, y]` with the returned `(coef, spec, x, y)`.
pub fn correction_term_spec(sys: &SystemModel, z: f64, n: usize, j: usize) -> Result<(f64, FoxHBivariateSpec, f64, f64)> {
    let (rf, thz, pt) = (&sys.rf, &sys.thz, &sys.pt);
    let w = *rf
        .weights()
        .get(n)
        .ok_or_else(|| Error::InvalidParameter(format!("mixture index {n} beyond truncation")))?;
    let a = rf.mu() + n as f64;
    let ln_coef = w.ln() - ln_gamma(a) + ln_series_weight(pt, j) - ln_gamma(thz.mu());
    let phi = pt.phi();
    let mut lower = vec![(1.0, 1.0), (thz.mu(), 2.0 / thz.alpha())];
    lower.extend(std::iter::repeat((phi, 2.0)).take(j + 1));
    lower.push((0.0, 1.0));
    let mut upper = vec![(1.0, 1.0)];
    upper.extend(std::iter::repeat((1.0 + phi, 2.0)).take(j + 1));
    let spec = FoxHBivariateSpec {
        n1: 1,
        m2: 0,
        n2: 1,
        m3: j + 3,
        n3: 1,
        joint_upper: vec![(1.0, 1.0, 1.0)],
        joint_lower: vec![],
        block1_upper: vec![(1.0 - a, 2.0 / rf.alpha())],
        block1_lower: vec![(0.0, 1.0)],
        block2_upper: upper,
        block2_lower: lower,
    };
    Ok((ln_coef.exp(), spec, rf.snr_scale() / z, sys.relay.c / thz.snr_scale(pt)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{PointingParams, RfFadingParams, ThzFadingParams};
    use crate::linkbudget::RelayParams;
    use crate::specfun::bivariate::fox_h_bivariate_with;
    use approx::assert_relative_eq;

    fn model(kappa: f64, s: f64, gbar: f64) -> SystemModel {
        let rf = RfFadingParams::new(1.8, kappa, 2.0, 2.0, gbar).unwrap();
        let thz = ThzFadingParams::new(1.5, 1.2, 1.0, gbar).unwrap();
        let pt = PointingParams::new(s, 0.15, 0.6087, 0.8).unwrap();
        SystemModel::new(rf, thz, pt, RelayParams::explicit(gbar / 2.0).unwrap()).unwrap()
    }

    #[test]
    fn separable_evaluator_matches_bivariate_terms() {
        // κ = 0 leaves one mixture term, so every j entry is a single bivariate H
        let sys = model(0.0, 0.1414, 5.0);
        let z = 2.0;
        let opts = QuadOptions::default();
        let fast = correction(&sys, Transform::Cdf(z), 3, &opts).unwrap();
        for j in 0..3 {
            let (coef, spec, x, y) = correction_term_spec(&sys, z, 0, j).unwrap();
            let h = fox_h_bivariate_with(&spec, x, y, Some((0.3, 0.4)), &opts).unwrap();
            assert_relative_eq!(fast.terms[j], coef * h.value, max_relative = 1e-6);
        }
    }

    #[test]
    fn cdf_and_pdf_match_conditioning_oracle() {
        let sys = model(4.0, 0.1414, 10.0);
        let oracle = ConditioningOracle::new(&sys).unwrap();
        let opts = AnalyticOptions::default();
        for &z in &[0.05, 0.5, 2.0, 10.0, 40.0] {
            let a = outage_probability(&sys, z, &opts).unwrap().value;
            assert_relative_eq!(a, oracle.cdf(z), max_relative = 1e-6);
            let f = pdf_end_to_end(&sys, z, &opts).unwrap().value;
            assert_relative_eq!(f, oracle.pdf(z).unwrap(), max_relative = 1e-5);
        }
    }

    #[test]
    fn ber_and_capacity_agree_with_fallbacks() {
        let sys = model(4.0, 0.1414, 10.0);
        let opts = AnalyticOptions { cross_check: false, ..Default::default() };
        let m = ModulationParams::default();
        let b = average_ber(&sys, m, &opts).unwrap().value;
        assert_relative_eq!(b, average_ber_by_quadrature(&sys, m, &opts).unwrap(), max_relative = 1e-5);
        let c = ergodic_capacity(&sys, &opts).unwrap().value;
        assert_relative_eq!(c, ergodic_capacity_by_quadrature(&sys, &opts).unwrap(), max_relative = 1e-5);
    }
}
