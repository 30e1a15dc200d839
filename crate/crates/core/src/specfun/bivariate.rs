//! Bivariate Fox H-function as a double Mellin–Barnes integral.
//!
//! ```text
//! H[x, y] = (1/(2πi)²) ∫∫ φ(s, t) θ₁(s) θ₂(t) x^s y^t ds dt
//! φ(s, t) = Π_{j≤n₁} Γ(1 − a_j + α_j s + A_j t)
//!           / (Π_{j>n₁} Γ(a_j − α_j s − A_j t) Π_j Γ(1 − b_j + β_j s + B_j t))
//! θ₁(s)   = Π_{j≤m₂} Γ(d_j − δ_j s) Π_{j≤n₂} Γ(1 − c_j + γ_j s)
//!           / (Π_{j>m₂} Γ(1 − d_j + δ_j s) Π_{j>n₂} Γ(c_j − γ_j s))
//! ```
//! and `θ₂` likewise with `(e, E)`, `(f, F)` and orders `m₃, n₃`.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::contour::{
    integrate_plane, strip_midpoint, Evaluation, GammaRatioProduct, GammaTerm, QuadOptions, SeparableIntegrand,
};
use crate::error::{Error, Result};

/// Parameters of the bivariate H-function
/// `H^{0,n₁ : m₂,n₂ : m₃,n₃}_{p₁,q₁ : p₂,q₂ : p₃,q₃}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FoxHBivariateSpec {
    pub n1: usize,
    pub m2: usize,
    pub n2: usize,
    pub m3: usize,
    pub n3: usize,
    /// `(a_j, α_j, A_j)`
    pub joint_upper: Vec<(f64, f64, f64)>,
    /// `(b_j, β_j, B_j)`
    pub joint_lower: Vec<(f64, f64, f64)>,
    /// `(c_j, γ_j)`
    pub block1_upper: Vec<(f64, f64)>,
    /// `(d_j, δ_j)`
    pub block1_lower: Vec<(f64, f64)>,
    /// `(e_j, E_j)`
    pub block2_upper: Vec<(f64, f64)>,
    /// `(f_j, F_j)`
    pub block2_lower: Vec<(f64, f64)>,
}

/// The three gamma blocks of a bivariate kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateKernel {
    pub joint: GammaRatioProduct,
    pub first: GammaRatioProduct,
    pub second: GammaRatioProduct,
}

impl BivariateKernel {
    pub fn numerators(&self) -> Vec<GammaTerm> {
        self.joint
            .numerator
            .iter()
            .chain(&self.first.numerator)
            .chain(&self.second.numerator)
            .copied()
            .collect()
    }
}

fn block(m: usize, n: usize, upper: &[(f64, f64)], lower: &[(f64, f64)], on_s: bool) -> GammaRatioProduct {
    let term = |off: f64, scale: f64| {
        if on_s {
            GammaTerm::new(off, scale, 0.0)
        } else {
            GammaTerm::new(off, 0.0, scale)
        }
    };
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (j, &(d, dd)) in lower.iter().enumerate() {
        if j < m {
            num.push(term(d, -dd));
        } else {
            den.push(term(1.0 - d, dd));
        }
    }
    for (j, &(c, cc)) in upper.iter().enumerate() {
        if j < n {
            num.push(term(1.0 - c, cc));
        } else {
            den.push(term(c, -cc));
        }
    }
    GammaRatioProduct::new(num, den)
}

impl FoxHBivariateSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("order index exceeds block size: {what}")));
        if self.n1 > self.joint_upper.len() {
            return bad("n1");
        }
        if self.m2 > self.block1_lower.len() || self.n2 > self.block1_upper.len() {
            return bad("block 1");
        }
        if self.m3 > self.block2_lower.len() || self.n3 > self.block2_upper.len() {
            return bad("block 2");
        }
        for &(a, s, t) in self.joint_upper.iter().chain(&self.joint_lower) {
            if !(a.is_finite() && s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("joint triple ({a}, {s}, {t}) needs positive scales")));
            }
        }
        for &(c, g) in self
            .block1_upper
            .iter()
            .chain(&self.block1_lower)
            .chain(&self.block2_upper)
            .chain(&self.block2_lower)
        {
            if !(c.is_finite() && g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("pair ({c}, {g}) needs a positive scale")));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> BivariateKernel {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (j, &(a, al, aa)) in self.joint_upper.iter().enumerate() {
            if j < self.n1 {
                num.push(GammaTerm::new(1.0 - a, al, aa));
            } else {
                den.push(GammaTerm::new(a, -al, -aa));
            }
        }
        for &(b, be, bb) in &self.joint_lower {
            den.push(GammaTerm::new(1.0 - b, be, bb));
        }
        BivariateKernel {
            joint: GammaRatioProduct::new(num, den),
            first: block(self.m2, self.n2, &self.block1_upper, &self.block1_lower, true),
            second: block(self.m3, self.n3, &self.block2_upper, &self.block2_lower, false),
        }
    }
}

/// Interior point of `{(σ_s, σ_v) : offset + s σ_s + v σ_v > 0}` for all terms.
///
/// `σ_s` is eliminated by pairing its lower and upper bounds, the projected
/// interval for `σ_v` is bisected, and `σ_s` is then centred in its own strip.
pub fn feasible_point(terms: &[GammaTerm]) -> Result<(f64, f64)> {
    // constraints a·σ_v + b > 0 on σ_v alone
    let mut proj: Vec<(f64, f64)> = Vec::new();
    let lower: Vec<&GammaTerm> = terms.iter().filter(|t| t.s > 0.0).collect();
    let upper: Vec<&GammaTerm> = terms.iter().filter(|t| t.s < 0.0).collect();
    for t in terms.iter().filter(|t| t.s == 0.0) {
        proj.push((t.v, t.offset));
    }
    for l in &lower {
        for u in &upper {
            // −(o_l + v_l σ_v)/s_l < (o_u + v_u σ_v)/(−s_u)
            let (sl, su) = (l.s, -u.s);
            proj.push((l.v / sl + u.v / su, l.offset / sl + u.offset / su));
        }
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (a, b) in proj {
        if a > 0.0 {
            lo = lo.max(-b / a);
        } else if a < 0.0 {
            hi = hi.min(b / -a);
        } else if b <= 0.0 {
            return Err(Error::ContourInfeasible("constant gamma factor sits on a pole".into()));
        }
    }
    let sigma_v = strip_midpoint(lo, hi)?;
    let mut slo = f64::NEG_INFINITY;
    let mut shi = f64::INFINITY;
    for t in terms {
        let off = t.offset + t.v * sigma_v;
        if t.s > 0.0 {
            slo = slo.max(-off / t.s);
        } else if t.s < 0.0 {
            shi = shi.min(off / -t.s);
        }
    }
    let sigma_s = strip_midpoint(slo, shi)?;
    Ok((sigma_s, sigma_v))
}

/// Check that `(σ_s, σ_v)` keeps every numerator argument in the right half-plane.
pub fn check_contour(terms: &[GammaTerm], sigma_s: f64, sigma_v: f64) -> Result<()> {
    for t in terms {
        if t.margin(sigma_s, sigma_v) <= 0.0 && (t.s != 0.0 || t.v != 0.0) {
            return Err(Error::ContourInfeasible(format!(
                "contour ({sigma_s}, {sigma_v}) crosses the poles of Γ({} + {} s + {} t)",
                t.offset, t.s, t.v
            )));
        }
    }
    Ok(())
}

/// `ln x` on the principal branch, `ln|x| + iπ` for negative `x`.
pub fn principal_ln(x: f64) -> Result<Complex64> {
    if x > 0.0 {
        Ok(Complex64::new(x.ln(), 0.0))
    } else if x < 0.0 {
        Ok(Complex64::new((-x).ln(), PI))
    } else {
        Err(Error::Domain("bivariate H argument must be non-zero".into()))
    }
}

/// `H[x, y]`, `x` real and non-zero, `y > 0`, on the automatic contour pair.
pub fn fox_h_bivariate(spec: &FoxHBivariateSpec, x: f64, y: f64) -> Result<Evaluation> {
    fox_h_bivariate_with(spec, x, y, None, &QuadOptions::default())
}

/// `H[x, y]` with an optional contour pair `(σ_s, σ_v)`.
pub fn fox_h_bivariate_with(
    spec: &FoxHBivariateSpec,
    x: f64,
    y: f64,
    contour: Option<(f64, f64)>,
    opts: &QuadOptions,
) -> Result<Evaluation> {
    spec.validate()?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("second argument must be positive, got {y}")));
    }
    let lx = principal_ln(x)?;
    let ly = y.ln();
    let k = spec.kernel();
    let numer = k.numerators();
    let (ss, sv) = match contour {
        Some(c) => c,
        None => feasible_point(&numer)?,
    };
    check_contour(&numer, ss, sv)?;
    let zero = Complex64::new(0.0, 0.0);
    let joint = |s: Complex64, v: Complex64| k.joint.ln_eval(s, v);
    let first = |s: Complex64| k.first.ln_eval(s, zero) + s * lx;
    let second = |v: Complex64| k.second.ln_eval(zero, v) + v * ly;
    let integrand = SeparableIntegrand { joint: &joint, first: &first, second: vec![&second] };
    let out = integrate_plane(&integrand, ss, sv, opts)?.into_evaluation();
    out.check_real()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::foxh::{fox_h, FoxHSpec};
    use approx::assert_relative_eq;

    #[test]
    fn separable_spec_is_a_product() {
        // no joint block: H = H₁[x] · H₂[y]
        let spec = FoxHBivariateSpec {
            m2: 1,
            n2: 1,
            m3: 2,
            block1_upper: vec![(0.3, 1.0)],
            block1_lower: vec![(0.0, 1.0), (-0.5, 1.0)],
            block2_lower: vec![(0.0, 1.0), (0.4, 1.5)],
            ..Default::default()
        };
        let h1 = FoxHSpec::new(1, 1, vec![(0.3, 1.0)], vec![(0.0, 1.0), (-0.5, 1.0)]).unwrap();
        let h2 = FoxHSpec::new(2, 0, vec![], vec![(0.0, 1.0), (0.4, 1.5)]).unwrap();
        let (x, y) = (0.6, 1.7);
        let b = fox_h_bivariate(&spec, x, y).unwrap().value;
        let p = fox_h(&h1, x).unwrap().value * fox_h(&h2, y).unwrap().value;
        assert_relative_eq!(b, p, max_relative = 1e-6);
    }

    #[test]
    fn beta_integral_coupling() {
        // (1/(2πi)²)∫∫ Γ(−s)Γ(−t)Γ(1+s+t) x^s y^t = 1/(1+x+y)
        let spec = FoxHBivariateSpec {
            n1: 1,
            m2: 1,
            m3: 1,
            joint_upper: vec![(0.0, 1.0, 1.0)],
            block1_lower: vec![(0.0, 1.0)],
            block2_lower: vec![(0.0, 1.0)],
            ..Default::default()
        };
        for &(x, y) in &[(0.5, 0.25), (2.0, 3.0)] {
            let v = fox_h_bivariate(&spec, x, y).unwrap().value;
            assert_relative_eq!(v, 1.0 / (1.0 + x + y), max_relative = 1e-8);
        }
        // arg x = π sits on the edge of the convergence sector here: no decay
        assert!(fox_h_bivariate(&spec, -0.3, 0.5).is_err());
    }

    #[test]
    fn contour_pair_projection() {
        let terms = [GammaTerm::new(0.0, -1.0, 0.0), GammaTerm::new(0.0, 0.0, -1.0), GammaTerm::new(1.0, 1.0, 1.0)];
        let (s, v) = feasible_point(&terms).unwrap();
        assert!(s < 0.0 && v < 0.0 && 1.0 + s + v > 0.0);
        assert!(check_contour(&terms, 0.1, -0.5).is_err());
        let bad = [GammaTerm::new(0.0, -1.0, 0.0), GammaTerm::new(-1.0, 1.0, 0.0)];
        assert!(feasible_point(&bad).is_err());
    }
}
