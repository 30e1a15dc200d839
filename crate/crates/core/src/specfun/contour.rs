//! Vertical-line contour quadrature for Mellin–Barnes integrals.
//!
//! An integrand is supplied in log form, `ln f(s)`, and integrated along
//! `s = σ + it` with composite Gauss–Legendre panels on a truncated range
//! `t ∈ [-T, T]`. `T` comes from an envelope scan (tail below `1e-15` of the
//! observed peak); the panel count doubles until two successive estimates
//! agree.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::quad::GaussLegendre;
use crate::error::{Error, Result};

/// A gamma factor `Γ(offset + s·u + v·w)` in one or two contour variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTerm {
    pub offset: f64,
    pub s: f64,
    pub v: f64,
}

impl GammaTerm {
    pub const fn new(offset: f64, s: f64, v: f64) -> Self {
        Self { offset, s, v }
    }

    pub const fn uni(offset: f64, scale: f64) -> Self {
        Self { offset, s: scale, v: 0.0 }
    }

    #[inline]
    pub fn arg(&self, s: Complex64, v: Complex64) -> Complex64 {
        self.offset + self.s * s + self.v * v
    }

    /// Real part of the argument on the contour `(σ_s, σ_v)`.
    pub fn margin(&self, sigma_s: f64, sigma_v: f64) -> f64 {
        self.offset + self.s * sigma_s + self.v * sigma_v
    }
}

/// Ratio of gamma products `Π Γ(num) / Π Γ(den)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GammaRatioProduct {
    pub numerator: Vec<GammaTerm>,
    pub denominator: Vec<GammaTerm>,
}

impl GammaRatioProduct {
    pub fn new(numerator: Vec<GammaTerm>, denominator: Vec<GammaTerm>) -> Self {
        Self { numerator, denominator }
    }

    /// `ln` of the ratio. Non-finite at poles of the numerator.
    #[inline]
    pub fn ln_eval(&self, s: Complex64, v: Complex64) -> Complex64 {
        sum_ln_gamma(&self.numerator, s, v) - sum_ln_gamma(&self.denominator, s, v)
    }

    pub fn depends_on_s(&self) -> bool {
        self.numerator.iter().chain(&self.denominator).any(|t| t.s != 0.0)
    }

    pub fn depends_on_v(&self) -> bool {
        self.numerator.iter().chain(&self.denominator).any(|t| t.v != 0.0)
    }

    /// Smallest distance (in argument units) from the contour to a numerator pole.
    pub fn min_margin(&self, sigma_s: f64, sigma_v: f64) -> f64 {
        self.numerator
            .iter()
            .filter(|t| t.s != 0.0 || t.v != 0.0)
            .map(|t| t.margin(sigma_s, sigma_v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Validate the scale invariant: every non-constant factor has finite scales.
    pub fn validate(&self) -> Result<()> {
        for t in self.numerator.iter().chain(&self.denominator) {
            if !(t.offset.is_finite() && t.s.is_finite() && t.v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite gamma factor {t:?}")));
            }
        }
        Ok(())
    }
}

/// `Σ ln Γ` over `terms`, evaluating runs of repeated factors once.
#[inline]
fn sum_ln_gamma(terms: &[GammaTerm], s: Complex64, v: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut last: Option<(&GammaTerm, Complex64)> = None;
    for t in terms {
        let val = match last {
            Some((p, val)) if p == t => val,
            _ => super::gamma::ln_gamma_complex_unchecked(t.arg(s, v)),
        };
        acc += val;
        last = Some((t, val));
    }
    acc
}

/// Path shape. Only straight vertical lines are implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Vertical,
}

/// Quadrature rule along the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    /// Composite 16-point Gauss–Legendre panels.
    GaussLegendre16,
    /// Uniform trapezoid rule, `nodes` points including both ends.
    Trapezoid,
}

/// A truncated vertical contour with its discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub path: PathKind,
    pub abscissa: f64,
    pub half_length: f64,
    pub nodes: usize,
    pub rule: QuadRule,
}

impl ContourSpec {
    pub fn vertical(abscissa: f64, half_length: f64, nodes: usize) -> Self {
        Self {
            path: PathKind::Vertical,
            abscissa,
            half_length,
            nodes,
            rule: QuadRule::GaussLegendre16,
        }
    }

    fn panels(&self) -> usize {
        (self.nodes / 16).max(1)
    }

    fn grid(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            QuadRule::GaussLegendre16 => {
                GaussLegendre::order16().composite(-self.half_length, self.half_length, self.panels())
            }
            QuadRule::Trapezoid => {
                let n = self.nodes.max(2);
                let h = 2.0 * self.half_length / (n - 1) as f64;
                let ts = (0..n).map(|i| -self.half_length + i as f64 * h).collect();
                let ws = (0..n).map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h }).collect();
                (ts, ws)
            }
        }
    }
}

/// Tolerances for contour quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    /// Absolute floor, as a fraction of the integrand's L1 mass.
    pub l1_floor: f64,
    /// Envelope cut, relative to the peak of `|f|` on the line.
    pub tail: f64,
    pub max_half_length: f64,
    pub max_nodes: usize,
    /// Whether an unresolved tolerance is an error or only flagged.
    pub strict: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            l1_floor: 1e-14,
            tail: 1e-15,
            max_half_length: 400.0,
            max_nodes: 1 << 14,
            strict: false,
        }
    }
}

/// Outcome of a contour evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub imag: f64,
    pub error: f64,
    /// `∫|f|` along the contour, the achievable-precision scale.
    pub l1: f64,
    pub contours: Vec<ContourSpec>,
    /// False when the tolerance loop gave up; `value` is the best estimate.
    pub converged: bool,
}

impl Evaluation {
    /// Realness check on the imaginary residue.
    pub fn check_real(&self) -> Result<()> {
        let bound = 1e-6 * self.value.abs() + 1e-12 * self.l1.max(1.0);
        if self.imag.abs() > bound {
            return Err(Error::NotReal { real: self.value, imag: self.imag });
        }
        Ok(())
    }
}

/// Open interval of feasible abscissae from the numerator constraints
/// `offset + scale·σ > 0`.
pub fn feasible_strip(terms: &[GammaTerm]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in terms {
        if t.s > 0.0 {
            lo = lo.max(-t.offset / t.s);
        } else if t.s < 0.0 {
            hi = hi.min(t.offset / -t.s);
        }
    }
    (lo, hi)
}

/// Midpoint of the strip; half a unit inside when one side is open.
pub fn strip_midpoint(lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::ContourInfeasible(format!(
            "pole families overlap: left bound {lo} >= right bound {hi}"
        )));
    }
    Ok(match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 0.5,
        (false, true) => hi - 0.5,
        (false, false) => 0.0,
    })
}

/// Abscissa in `(lo, hi)` minimizing the real-axis magnitude `ln|f(σ)|`, which
/// is where the line integral is best conditioned (least cancellation).
/// `objective` may return `+∞` to exclude a candidate.
pub fn best_abscissa<F: Fn(f64) -> f64>(lo: f64, hi: f64, objective: F) -> Result<f64> {
    Ok(best_abscissa_with_value(lo, hi, objective)?.1)
}

/// As [`best_abscissa`], also returning the objective at the chosen point
/// (`+∞` when every candidate was excluded and the midpoint is returned).
pub fn best_abscissa_with_value<F: Fn(f64) -> f64>(lo: f64, hi: f64, objective: F) -> Result<(f64, f64)> {
    let fallback = strip_midpoint(lo, hi)?;
    let mut cands = Vec::new();
    let geometric = |k: usize| 0.02 * 1.12_f64.powi(k as i32);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let d = (0.1 * (hi - lo)).min(0.02);
            for i in 0..=48 {
                cands.push(lo + d + (hi - lo - 2.0 * d) * i as f64 / 48.0);
            }
        }
        (true, false) => cands.extend((0..=90).map(|k| lo + geometric(k))),
        (false, true) => cands.extend((0..=90).map(|k| hi - geometric(k))),
        (false, false) => {
            cands.push(0.0);
            for k in 0..=90 {
                cands.push(geometric(k));
                cands.push(-geometric(k));
            }
        }
    }
    let mut best = (f64::INFINITY, fallback);
    for c in cands {
        let v = objective(c);
        if v.is_finite() && v < best.0 {
            best = (v, c);
        }
    }
    Ok(best)
}

/// Whether a denominator factor has a zero of `1/Γ` within `0.1` of `(σ_s, σ_v)`.
pub fn near_denominator_zero(prod: &GammaRatioProduct, sigma_s: f64, sigma_v: f64) -> bool {
    prod.denominator.iter().any(|t| {
        let z = t.margin(sigma_s, sigma_v);
        z < 0.1 && (z - z.round()).abs() < 0.1
    })
}

/// Scan `|f|` outward along `t` (both signs) and return the extent where it
/// falls below `tail` of the running peak for good.
fn envelope_extent<F: Fn(f64) -> f64>(ln_abs: F, tail: f64, t_max: f64) -> Result<(f64, f64)> {
    let cut = tail.ln();
    let step = 0.25;
    let mut peak = ln_abs(0.0);
    let mut extent: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let mut t = 0.0;
        let mut below = 0usize;
        let mut last_above = 0.0;
        while below < 16 {
            t += step;
            if t > t_max {
                return Err(Error::ContourInfeasible(format!(
                    "integrand does not decay along the contour within |t| <= {t_max}"
                )));
            }
            let l = ln_abs(sign * t);
            if l.is_nan() {
                continue;
            }
            if l > peak {
                peak = l;
            }
            if l < peak + cut {
                below += 1;
            } else {
                below = 0;
                last_above = t;
            }
        }
        extent = extent.max(last_above + step);
    }
    Ok((extent, peak))
}

fn initial_panels(half_length: f64) -> usize {
    // panels of width about two
    (half_length.ceil() as usize).max(2)
}

/// `(1/2πi) ∫ f(s) ds` along `Re s = σ` for `ln f` given by `ln_f`.
pub fn integrate_line<F>(ln_f: F, sigma: f64, opts: &QuadOptions) -> Result<Evaluation>
where
    F: Fn(Complex64) -> Complex64,
{
    let (extent, _) = envelope_extent(|t| ln_f(Complex64::new(sigma, t)).re, opts.tail, opts.max_half_length)?;
    let half = extent.max(1.0);
    let mut panels = initial_panels(half);
    let eval = |panels: usize| -> (Complex64, f64, ContourSpec) {
        let c = ContourSpec::vertical(sigma, half, panels * 16);
        let (ts, ws) = c.grid();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for (t, w) in ts.iter().zip(&ws) {
            let v = ln_f(Complex64::new(sigma, *t)).exp();
            if v.re.is_finite() && v.im.is_finite() {
                sum += *w * v;
                l1 += *w * v.norm();
            }
        }
        (sum / (2.0 * PI), l1 / (2.0 * PI), c)
    };
    let (mut prev, _, _) = eval(panels);
    loop {
        panels *= 2;
        let (cur, l1, spec) = eval(panels);
        let err = (cur - prev).norm();
        let target = opts.rel_tol * cur.re.abs() + opts.l1_floor * l1;
        let done = err <= target;
        if done || panels * 16 >= opts.max_nodes {
            let out = Evaluation {
                value: cur.re,
                imag: cur.im,
                error: err.max(f64::EPSILON * l1),
                l1,
                contours: vec![spec],
                converged: done,
            };
            if !done && opts.strict {
                return Err(Error::ToleranceNotMet { estimate: out.value, error: out.error });
            }
            return Ok(out);
        }
        prev = cur;
    }
}

/// Evaluate `(1/2πi) ∫ f(s) ds` along an explicitly given contour, no adaptivity.
pub fn integrate_fixed<F>(ln_f: F, contour: &ContourSpec) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let (ts, ws) = contour.grid();
    let mut sum = Complex64::new(0.0, 0.0);
    for (t, w) in ts.iter().zip(&ws) {
        let v = ln_f(Complex64::new(contour.abscissa, *t)).exp();
        if v.re.is_finite() && v.im.is_finite() {
            sum += *w * v;
        }
    }
    sum / (2.0 * PI)
}

/// A double Mellin–Barnes integrand split as
/// `K(s, v) · A(s) · Σ_b B_b(v)`, every piece given in log form.
pub struct SeparableIntegrand<'a> {
    pub joint: &'a (dyn Fn(Complex64, Complex64) -> Complex64 + Sync),
    pub first: &'a (dyn Fn(Complex64) -> Complex64 + Sync),
    pub second: Vec<&'a (dyn Fn(Complex64) -> Complex64 + Sync)>,
}

/// Result of a double contour integral, split per second-block term.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEvaluation {
    pub terms: Vec<f64>,
    pub imag: f64,
    pub error: f64,
    pub l1: f64,
    pub contours: Vec<ContourSpec>,
    pub converged: bool,
}

impl SeriesEvaluation {
    pub fn total(&self) -> f64 {
        self.terms.iter().sum()
    }

    pub fn into_evaluation(self) -> Evaluation {
        Evaluation {
            value: self.total(),
            imag: self.imag,
            error: self.error,
            l1: self.l1,
            contours: self.contours,
            converged: self.converged,
        }
    }
}

fn log_sum_abs(vals: &[Complex64]) -> f64 {
    let m = vals.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vals.iter().map(|v| (v.re - m).exp()).sum::<f64>().ln()
}

/// `(1/(2πi)²) ∫∫ K(s,v) A(s) B_b(v) ds dv` on the contour pair `(σ_s, σ_v)`,
/// for every `b`, sharing one tensor grid.
pub fn integrate_plane(
    integrand: &SeparableIntegrand<'_>,
    sigma_s: f64,
    sigma_v: f64,
    opts: &QuadOptions,
) -> Result<SeriesEvaluation> {
    let nb = integrand.second.len();
    if nb == 0 {
        return Err(Error::InvalidParameter("empty second block".into()));
    }
    let ln_abs = |ts: f64, tv: f64| -> f64 {
        let s = Complex64::new(sigma_s, ts);
        let v = Complex64::new(sigma_v, tv);
        let b: Vec<Complex64> = integrand.second.iter().map(|g| g(v)).collect();
        ((integrand.joint)(s, v) + (integrand.first)(s)).re + log_sum_abs(&b)
    };
    // extents along the axes and both diagonals
    let (ex_s, _) = envelope_extent(|t| ln_abs(t, 0.0), opts.tail, opts.max_half_length)?;
    let (ex_v, _) = envelope_extent(|t| ln_abs(0.0, t), opts.tail, opts.max_half_length)?;
    let (ex_d1, _) = envelope_extent(|t| ln_abs(t, t), opts.tail, opts.max_half_length)?;
    let (ex_d2, _) = envelope_extent(|t| ln_abs(t, -t), opts.tail, opts.max_half_length)?;
    let half_s = ex_s.max(ex_d1).max(ex_d2).max(1.0);
    let half_v = ex_v.max(ex_d1).max(ex_d2).max(1.0);

    let gl = GaussLegendre::order16();
    let eval = |ps: usize, pv: usize| -> (Vec<Complex64>, f64, Vec<ContourSpec>) {
        let (ts, ws) = gl.composite(-half_s, half_s, ps);
        let (tv, wv) = gl.composite(-half_v, half_v, pv);
        let svals: Vec<Complex64> = ts.iter().map(|t| Complex64::new(sigma_s, *t)).collect();
        let vvals: Vec<Complex64> = tv.iter().map(|t| Complex64::new(sigma_v, *t)).collect();
        let la: Vec<Complex64> = svals.iter().map(|s| (integrand.first)(*s)).collect();
        let lb: Vec<Vec<Complex64>> = integrand
            .second
            .iter()
            .map(|g| vvals.iter().map(|v| g(*v)).collect())
            .collect();
        let amax = la.iter().map(|z| z.re).filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        let bmax = lb
            .iter()
            .flat_map(|r| r.iter().map(|z| z.re))
            .filter(|x| x.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = amax + bmax;
        let a: Vec<Complex64> = la
            .iter()
            .zip(&ws)
            .map(|(z, w)| if z.re.is_finite() { *w * (z - amax).exp() } else { Complex64::new(0.0, 0.0) })
            .collect();
        let b: Vec<Vec<Complex64>> = lb
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&wv)
                    .map(|(z, w)| if z.re.is_finite() { *w * (z - bmax).exp() } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        let bsum: Vec<f64> = (0..vvals.len()).map(|k| b.iter().map(|r| r[k].norm()).sum()).collect();
        let rows: Vec<(Vec<Complex64>, f64)> = {
            use rayon::prelude::*;
            svals
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut acc = vec![Complex64::new(0.0, 0.0); nb];
                    let mut l1 = 0.0;
                    if a[i].norm() == 0.0 {
                        return (acc, l1);
                    }
                    for (k, v) in vvals.iter().enumerate() {
                        let kv = (integrand.joint)(*s, *v).exp() * a[i];
                        if !(kv.re.is_finite() && kv.im.is_finite()) {
                            continue;
                        }
                        for (bi, row) in b.iter().enumerate() {
                            acc[bi] += kv * row[k];
                        }
                        l1 += kv.norm() * bsum[k];
                    }
                    (acc, l1)
                })
                .collect()
        };
        let norm = (2.0 * PI) * (2.0 * PI);
        let factor = scale.exp() / norm;
        let mut terms = vec![Complex64::new(0.0, 0.0); nb];
        let mut l1 = 0.0;
        for (acc, l) in rows {
            for (t, a) in terms.iter_mut().zip(acc) {
                *t += a;
            }
            l1 += l;
        }
        // (1/2πi)^2 with ds dv = (i dt_s)(i dt_v) gives 1/(2π)^2
        let terms = terms.into_iter().map(|t| t * factor).collect();
        let contours = vec![
            ContourSpec::vertical(sigma_s, half_s, ps * 16),
            ContourSpec::vertical(sigma_v, half_v, pv * 16),
        ];
        (terms, l1 * factor, contours)
    };

    let mut ps = initial_panels(half_s);
    let mut pv = initial_panels(half_v);
    let (mut prev, _, _) = eval(ps, pv);
    loop {
        ps *= 2;
        pv *= 2;
        let (cur, l1, contours) = eval(ps, pv);
        let tot: Complex64 = cur.iter().sum();
        let ptot: Complex64 = prev.iter().sum();
        let err = (tot - ptot).norm();
        let target = opts.rel_tol * tot.re.abs() + opts.l1_floor * l1;
        let done = err <= target;
        if done || (ps * 16).max(pv * 16) >= opts.max_nodes {
            let out = SeriesEvaluation {
                terms: cur.iter().map(|t| t.re).collect(),
                imag: tot.im,
                error: err.max(f64::EPSILON * l1),
                l1,
                contours,
                converged: done,
            };
            if !done && opts.strict {
                return Err(Error::ToleranceNotMet { estimate: tot.re, error: out.error });
            }
            return Ok(out);
        }
        prev = cur;
    }
}

/// A double Mellin–Barnes integrand whose coupling depends on `s` and `v`
/// only through `w = a s + b v`: `K(w) · A(s) · Σ_b B_b(v)`, all in log form.
pub struct LatticeIntegrand<'a> {
    pub joint: &'a (dyn Fn(Complex64) -> Complex64 + Sync),
    pub a: f64,
    pub b: f64,
    pub first: &'a (dyn Fn(Complex64) -> Complex64 + Sync),
    pub second: Vec<&'a (dyn Fn(Complex64) -> Complex64 + Sync)>,
}

/// Double contour integral of a [`LatticeIntegrand`] by the trapezoid rule on
/// steps `h` in `t_s` and `h a/b` in `t_v`. On that lattice `w` takes only
/// `O(N)` distinct values, so the coupling costs one evaluation per line point.
/// The step halves until two estimates agree.
pub fn integrate_plane_lattice(
    integrand: &LatticeIntegrand<'_>,
    sigma_s: f64,
    sigma_v: f64,
    opts: &QuadOptions,
) -> Result<SeriesEvaluation> {
    let nb = integrand.second.len();
    if nb == 0 {
        return Err(Error::InvalidParameter("empty second block".into()));
    }
    if !(integrand.a > 0.0 && integrand.b > 0.0) {
        return Err(Error::InvalidParameter("lattice coupling needs positive scales".into()));
    }
    let (a, b) = (integrand.a, integrand.b);
    let w0 = a * sigma_s + b * sigma_v;
    let ln_abs = |ts: f64, tv: f64| -> f64 {
        let s = Complex64::new(sigma_s, ts);
        let v = Complex64::new(sigma_v, tv);
        let bs: Vec<Complex64> = integrand.second.iter().map(|g| g(v)).collect();
        ((integrand.joint)(a * s + b * v) + (integrand.first)(s)).re + log_sum_abs(&bs)
    };
    let (ex_s, _) = envelope_extent(|t| ln_abs(t, 0.0), opts.tail, opts.max_half_length)?;
    let (ex_v, _) = envelope_extent(|t| ln_abs(0.0, t), opts.tail, opts.max_half_length)?;
    let (ex_d1, _) = envelope_extent(|t| ln_abs(t, t), opts.tail, opts.max_half_length)?;
    let (ex_d2, _) = envelope_extent(|t| ln_abs(t, -t), opts.tail, opts.max_half_length)?;
    let half_s = ex_s.max(ex_d1).max(ex_d2).max(1.0);
    let half_v = ex_v.max(ex_d1).max(ex_d2).max(1.0);

    let shifted = |vals: Vec<Complex64>| -> (Vec<Complex64>, f64) {
        let m = vals.iter().map(|z| z.re).filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        let out = vals
            .into_iter()
            .map(|z| if z.re.is_finite() && z.im.is_finite() { (z - m).exp() } else { Complex64::new(0.0, 0.0) })
            .collect();
        (out, m)
    };
    let eval = |h: f64| -> (Vec<Complex64>, f64, Vec<ContourSpec>) {
        let hv = h * a / b;
        let ns = (half_s / h).ceil() as i64;
        let nv = (half_v / hv).ceil() as i64;
        let (av, amax) = shifted((-ns..=ns).map(|i| (integrand.first)(Complex64::new(sigma_s, i as f64 * h))).collect());
        let mut bmax = f64::NEG_INFINITY;
        let raw_b: Vec<Vec<Complex64>> = integrand
            .second
            .iter()
            .map(|g| (-nv..=nv).map(|k| g(Complex64::new(sigma_v, k as f64 * hv))).collect::<Vec<_>>())
            .collect();
        for r in &raw_b {
            for z in r {
                if z.re.is_finite() {
                    bmax = bmax.max(z.re);
                }
            }
        }
        let bv: Vec<Vec<Complex64>> = raw_b
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|z| if z.re.is_finite() && z.im.is_finite() { (z - bmax).exp() } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        let (gv, gmax) = shifted(
            (-(ns + nv)..=(ns + nv)).map(|m| (integrand.joint)(Complex64::new(w0, m as f64 * a * h))).collect(),
        );
        let nvn = (2 * nv + 1) as usize;
        let bsum: Vec<f64> = (0..nvn).map(|k| bv.iter().map(|r| r[k].norm()).sum()).collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); nb];
        let mut l1 = 0.0;
        let mut row = vec![Complex64::new(0.0, 0.0); nvn];
        for (i, ai) in av.iter().enumerate() {
            if ai.norm() == 0.0 {
                continue;
            }
            // index of w at (i, k = 0) in gv is i + nv
            for k in 0..nvn {
                row[k] = *ai * gv[i + k];
                l1 += row[k].norm() * bsum[k];
            }
            for (t, r) in acc.iter_mut().zip(&bv) {
                let mut sum = Complex64::new(0.0, 0.0);
                for k in 0..nvn {
                    sum += row[k] * r[k];
                }
                *t += sum;
            }
        }
        let factor = (amax + bmax + gmax).exp() * h * hv / ((2.0 * PI) * (2.0 * PI));
        let contours = vec![
            ContourSpec { path: PathKind::Vertical, abscissa: sigma_s, half_length: ns as f64 * h, nodes: (2 * ns + 1) as usize, rule: QuadRule::Trapezoid },
            ContourSpec { path: PathKind::Vertical, abscissa: sigma_v, half_length: nv as f64 * hv, nodes: nvn, rule: QuadRule::Trapezoid },
        ];
        (acc.into_iter().map(|t| t * factor).collect(), l1 * factor, contours)
    };

    let mut h = 0.25;
    let (mut prev, _, _) = eval(h);
    loop {
        h /= 2.0;
        let (cur, l1, contours) = eval(h);
        let tot: Complex64 = cur.iter().sum();
        let ptot: Complex64 = prev.iter().sum();
        let err = (tot - ptot).norm();
        let target = opts.rel_tol * tot.re.abs() + opts.l1_floor * l1;
        let nodes = contours.iter().map(|c| c.nodes).max().unwrap_or(0);
        // the trapezoid error roughly squares (relative to the L1 scale) when the
        // step halves; the factor 1e3 covers the slack seen in practice
        let predicted = 1e3 * err * err / l1.max(f64::MIN_POSITIVE);
        let done = err <= target || (err <= 1e-3 * l1 && predicted <= target);
        if done || 2 * nodes >= opts.max_nodes {
            let out = SeriesEvaluation {
                terms: cur.iter().map(|t| t.re).collect(),
                imag: tot.im,
                error: predicted.max(f64::EPSILON * l1),
                l1,
                contours,
                converged: done,
            };
            if !done && opts.strict {
                return Err(Error::ToleranceNotMet { estimate: tot.re, error: out.error });
            }
            return Ok(out);
        }
        prev = cur;
    }
}
