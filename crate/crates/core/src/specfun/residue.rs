//! Residues of Mellin–Barnes kernels with linear gamma arguments.
//!
//! A residue in `s` at a pole of one factor `Γ(o + a s + b v)` lies on the
//! line `s = s*(v)`; substituting it leaves a kernel that is again a gamma
//! ratio with linear arguments in `v`, so iterated residues stay closed form.
//! Double poles are expanded with digamma values.

use num_complex::Complex64;

use super::bivariate::FoxHBivariateSpec;
use super::contour::{integrate_line, GammaRatioProduct, GammaTerm, QuadOptions};
use super::gamma::{digamma, ln_gamma, ln_gamma_signed};
use crate::error::{Error, Result};

const POLE_TOL: f64 = 1e-9;

/// Which way the contour is closed. Closing to the right flips the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// Second stage of an iterated residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondStage {
    /// Residue at `v = at`.
    Pole { at: f64, side: Side },
    /// Numerical line integral at `Re v = abscissa`.
    Line { abscissa: f64 },
}

/// A residue in `s` at pole `k` of numerator factor `factor`, followed by the
/// `v` stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleDescriptor {
    pub factor: usize,
    pub k: usize,
    pub side: Side,
    pub then: SecondStage,
}

/// A residue contribution `value ∝ x^{x_exponent} y^{y_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueTerm {
    pub value: f64,
    pub x_exponent: f64,
    pub y_exponent: f64,
}

/// A kernel `K(s, v) x^s y^v` with `x, y > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MellinKernel {
    pub product: GammaRatioProduct,
    pub ln_x: f64,
    pub ln_y: f64,
}

/// The kernel left after taking an `s` residue: `scale · K(v) · x^{c0} · y_eff^v`,
/// with `s = c0 + c1 v` on the pole line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedKernel {
    pub product: GammaRatioProduct,
    pub scale: f64,
    pub c0: f64,
    pub c1: f64,
    pub ln_x: f64,
    pub ln_y_eff: f64,
}

fn nonpositive_integer(z: f64) -> Option<usize> {
    let r = z.round();
    if r <= 0.0 && (z - r).abs() < POLE_TOL {
        Some((-r) as usize)
    } else {
        None
    }
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

impl MellinKernel {
    pub fn new(product: GammaRatioProduct, x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Domain("residue expansion needs positive arguments".into()));
        }
        Ok(Self { product, ln_x: x.ln(), ln_y: y.ln() })
    }

    /// Residue in `s` at pole `k` of numerator factor `factor`.
    pub fn residue_in_s(&self, factor: usize, k: usize) -> Result<ReducedKernel> {
        let t = *self
            .product
            .numerator
            .get(factor)
            .ok_or_else(|| Error::InvalidParameter(format!("no numerator factor {factor}")))?;
        if t.s == 0.0 {
            return Err(Error::InvalidParameter("factor does not depend on s".into()));
        }
        // o + a s + b v = −k  ⇒  s = c0 + c1 v
        let c0 = (-(k as f64) - t.offset) / t.s;
        let c1 = -t.v / t.s;
        let sub = |g: &GammaTerm| GammaTerm::new(g.offset + g.s * c0, 0.0, g.v + g.s * c1);
        let mut numerator = Vec::new();
        for (i, g) in self.product.numerator.iter().enumerate() {
            if i == factor {
                continue;
            }
            let r = sub(g);
            if r.v == 0.0 && nonpositive_integer(r.offset).is_some() {
                return Err(Error::UnsupportedPole(2));
            }
            numerator.push(r);
        }
        let denominator: Vec<GammaTerm> = self.product.denominator.iter().map(sub).collect();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let scale = sign / ((ln_factorial(k)).exp() * t.s);
        Ok(ReducedKernel {
            product: GammaRatioProduct::new(numerator, denominator),
            scale,
            c0,
            c1,
            ln_x: self.ln_x,
            ln_y_eff: self.c1_ln(c1),
        })
    }

    fn c1_ln(&self, c1: f64) -> f64 {
        c1 * self.ln_x + self.ln_y
    }
}

impl ReducedKernel {
    /// Residue in `v` at `at`. Pole order is the number of singular numerator
    /// factors minus singular denominator factors; orders above two are rejected.
    pub fn residue_at(&self, at: f64) -> Result<ResidueTerm> {
        let mut lead_ln = 0.0;
        let mut lead_sign = 1.0;
        let mut order: i64 = 0;
        let mut dlog = self.ln_y_eff;
        let mut sing_psi = 0.0;
        let mut rest_ln = 0.0;
        let mut rest_sign = 1.0;
        for (is_num, g) in self
            .product
            .numerator
            .iter()
            .map(|g| (true, g))
            .chain(self.product.denominator.iter().map(|g| (false, g)))
        {
            let z = g.offset + g.v * at;
            match (nonpositive_integer(z), g.v != 0.0) {
                (Some(k), true) => {
                    let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let lf = ln_factorial(k);
                    let psi = digamma(k as f64 + 1.0)?;
                    if is_num {
                        order += 1;
                        lead_ln += -lf - g.v.abs().ln();
                        lead_sign *= sgn * g.v.signum();
                        sing_psi += g.v * psi;
                    } else {
                        order -= 1;
                        lead_ln += lf + g.v.abs().ln();
                        lead_sign *= sgn * g.v.signum();
                        sing_psi -= g.v * psi;
                    }
                }
                (Some(_), false) => {
                    if is_num {
                        return Err(Error::GammaPole(z));
                    }
                    return Ok(ResidueTerm { value: 0.0, x_exponent: self.c0 + self.c1 * at, y_exponent: at });
                }
                (None, _) => {
                    let (l, s) = ln_gamma_signed(z)?;
                    if is_num {
                        rest_ln += l;
                        rest_sign *= s;
                        if g.v != 0.0 {
                            dlog += g.v * digamma(z)?;
                        }
                    } else {
                        rest_ln -= l;
                        rest_sign *= s;
                        if g.v != 0.0 {
                            dlog -= g.v * digamma(z)?;
                        }
                    }
                }
            }
        }
        let x_exponent = self.c0 + self.c1 * at;
        let power = self.c0 * self.ln_x + at * self.ln_y_eff;
        let base = self.scale * lead_sign * rest_sign * (lead_ln + rest_ln + power).exp();
        let value = match order {
            i64::MIN..=0 => 0.0,
            1 => base,
            2 => base * (sing_psi + dlog),
            n => return Err(Error::UnsupportedPole(n as usize)),
        };
        Ok(ResidueTerm { value, x_exponent, y_exponent: at })
    }

    /// `(1/2πi) ∫ scale · K(v) x^{c0} y_eff^v dv` along `Re v = abscissa`.
    pub fn integrate(&self, abscissa: f64, opts: &QuadOptions) -> Result<f64> {
        for g in &self.product.numerator {
            if g.v != 0.0 && g.offset + g.v * abscissa <= 0.0 {
                return Err(Error::ContourInfeasible(format!("abscissa {abscissa} crosses a pole")));
            }
        }
        let zero = Complex64::new(0.0, 0.0);
        let shift = self.c0 * self.ln_x;
        let out = integrate_line(
            |v| self.product.ln_eval(zero, v) + v * self.ln_y_eff + shift,
            abscissa,
            opts,
        )?;
        out.check_real()?;
        Ok(self.scale * out.value)
    }
}

/// Iterated residues of a bivariate H kernel at the listed poles.
/// Factor indices run over joint, then first-block, then second-block numerators.
pub fn residue_series(
    spec: &FoxHBivariateSpec,
    x: f64,
    y: f64,
    poles: &[PoleDescriptor],
) -> Result<Vec<ResidueTerm>> {
    spec.validate()?;
    let k = spec.kernel();
    let mut numerator = k.numerators();
    let mut denominator = k.joint.denominator.clone();
    denominator.extend(k.first.denominator.iter().copied());
    denominator.extend(k.second.denominator.iter().copied());
    numerator.shrink_to_fit();
    let kernel = MellinKernel::new(GammaRatioProduct::new(numerator, denominator), x, y)?;
    poles
        .iter()
        .map(|p| {
            let red = kernel.residue_in_s(p.factor, p.k)?;
            let sign = p.side.sign();
            match p.then {
                SecondStage::Pole { at, side } => {
                    let mut t = red.residue_at(at)?;
                    t.value *= sign * side.sign();
                    Ok(t)
                }
                SecondStage::Line { abscissa } => Ok(ResidueTerm {
                    value: sign * red.integrate(abscissa, &QuadOptions::default())?,
                    x_exponent: red.c0 + red.c1 * abscissa,
                    y_exponent: f64::NAN,
                }),
            }
        })
        .collect()
}

/// Residue of `exp(ln_f)` at an isolated singularity `centre` by the trapezoid
/// rule on the circle `|z − centre| = radius` with `nodes` points. The circle
/// must not enclose any other singularity. Works for poles of any order and
/// for essential singularities, since only the Laurent coefficient is read off.
pub fn circle_residue<F>(ln_f: F, centre: Complex64, radius: f64, nodes: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(radius > 0.0) || nodes < 4 {
        return Err(Error::InvalidParameter(format!("circle radius {radius} with {nodes} nodes")));
    }
    let logs: Vec<Complex64> = (0..nodes)
        .map(|k| {
            let e = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / nodes as f64);
            ln_f(centre + e) + e.ln()
        })
        .collect();
    let peak = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::NumericalHealth("non-finite integrand on a residue circle".into()));
    }
    let sum: Complex64 = logs.iter().map(|l| (l - peak).exp()).sum();
    Ok(sum / nodes as f64 * peak.exp())
}
