//! Univariate Fox H-function and Meijer G-function.
//!
//! Convention:
//!
//! ```text
//! H^{m,n}_{p,q}[x] = (1/2πi) ∫ Π_{j≤m} Γ(b_j − B_j s) Π_{j≤n} Γ(1 − a_j + A_j s)
//!                      / (Π_{j>m} Γ(1 − b_j + B_j s) Π_{j>n} Γ(a_j − A_j s)) x^s ds
//! ```

use num_complex::Complex64;

use super::contour::{
    best_abscissa, feasible_strip, integrate_line, near_denominator_zero, Evaluation, GammaRatioProduct, GammaTerm,
    QuadOptions,
};
use super::gamma::ln_gamma_signed;
use crate::error::{Error, Result};

/// Parameters of `H^{m,n}_{p,q}`. `p` and `q` are the list lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct FoxHSpec {
    pub m: usize,
    pub n: usize,
    pub upper_params: Vec<(f64, f64)>,
    pub lower_params: Vec<(f64, f64)>,
}

/// `k` copies of one parameter pair.
pub fn repeat(pair: (f64, f64), k: usize) -> Vec<(f64, f64)> {
    vec![pair; k]
}

impl FoxHSpec {
    pub fn new(m: usize, n: usize, upper_params: Vec<(f64, f64)>, lower_params: Vec<(f64, f64)>) -> Result<Self> {
        let spec = Self { m, n, upper_params, lower_params };
        spec.validate()?;
        Ok(spec)
    }

    /// Meijer-G parameters: every scale is one.
    pub fn meijer(m: usize, n: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(m, n, a.iter().map(|&x| (x, 1.0)).collect(), b.iter().map(|&x| (x, 1.0)).collect())
    }

    pub fn p(&self) -> usize {
        self.upper_params.len()
    }

    pub fn q(&self) -> usize {
        self.lower_params.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > self.q() || self.n > self.p() {
            return Err(Error::InvalidParameter(format!(
                "order indices m={}, n={} exceed q={}, p={}",
                self.m,
                self.n,
                self.q(),
                self.p()
            )));
        }
        for &(v, scale) in self.upper_params.iter().chain(&self.lower_params) {
            if !v.is_finite() || !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!("parameter pair ({v}, {scale}) needs a positive scale")));
            }
        }
        Ok(())
    }

    pub fn is_meijer(&self) -> bool {
        self.upper_params.iter().chain(&self.lower_params).all(|&(_, s)| s == 1.0)
    }

    /// The Mellin–Barnes kernel as a gamma ratio in `s`.
    pub fn kernel(&self) -> GammaRatioProduct {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (j, &(b, bb)) in self.lower_params.iter().enumerate() {
            if j < self.m {
                num.push(GammaTerm::uni(b, -bb));
            } else {
                den.push(GammaTerm::uni(1.0 - b, bb));
            }
        }
        for (j, &(a, aa)) in self.upper_params.iter().enumerate() {
            if j < self.n {
                num.push(GammaTerm::uni(1.0 - a, aa));
            } else {
                den.push(GammaTerm::uni(a, -aa));
            }
        }
        GammaRatioProduct::new(num, den)
    }

    /// Feasible strip for the abscissa, `(lo, hi)`.
    pub fn strip(&self) -> (f64, f64) {
        feasible_strip(&self.kernel().numerator)
    }

    /// `a* = Σ_{j≤n} A_j − Σ_{j>n} A_j + Σ_{j≤m} B_j − Σ_{j>m} B_j`.
    pub fn a_star(&self) -> f64 {
        let up: f64 = self
            .upper_params
            .iter()
            .enumerate()
            .map(|(j, &(_, a))| if j < self.n { a } else { -a })
            .sum();
        let lo: f64 = self
            .lower_params
            .iter()
            .enumerate()
            .map(|(j, &(_, b))| if j < self.m { b } else { -b })
            .sum();
        up + lo
    }
}

/// `H[x]` for `x > 0` on the automatic contour.
pub fn fox_h(spec: &FoxHSpec, x: f64) -> Result<Evaluation> {
    fox_h_with(spec, x, None, &QuadOptions::default())
}

/// `H[x]` with an optional abscissa override.
pub fn fox_h_with(spec: &FoxHSpec, x: f64, abscissa: Option<f64>, opts: &QuadOptions) -> Result<Evaluation> {
    spec.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("Fox H argument must be positive, got {x}")));
    }
    let (lo, hi) = spec.strip();
    let sigma = match abscissa {
        Some(s) => {
            if !(s > lo && s < hi) {
                return Err(Error::ContourInfeasible(format!("abscissa {s} outside strip ({lo}, {hi})")));
            }
            s
        }
        None => {
            let kernel = spec.kernel();
            let lx = x.ln();
            best_abscissa(lo, hi, |sg| {
                if near_denominator_zero(&kernel, sg, 0.0) {
                    return f64::INFINITY;
                }
                kernel.ln_eval(Complex64::new(sg, 0.0), Complex64::new(0.0, 0.0)).re + sg * lx
            })?
        }
    };
    let kernel = spec.kernel();
    let lx = x.ln();
    let zero = Complex64::new(0.0, 0.0);
    let out = integrate_line(|s| kernel.ln_eval(s, zero) + s * lx, sigma, opts)?;
    out.check_real()?;
    Ok(out)
}

/// Meijer G through the contour integral; requires unit scales and `x > 0`.
pub fn meijer_g(spec: &FoxHSpec, x: f64) -> Result<Evaluation> {
    if !spec.is_meijer() {
        return Err(Error::InvalidParameter("Meijer G needs unit scales".into()));
    }
    fox_h(spec, x)
}

fn ln_abs_rgamma(x: f64) -> (f64, f64) {
    // (ln|1/Γ(x)|, sign); zero at poles encoded as sign 0
    match ln_gamma_signed(x) {
        Ok((l, s)) => (-l, s),
        Err(_) => (f64::NEG_INFINITY, 0.0),
    }
}

/// Meijer G by its left-pole residue sum, valid for any real `x` when `p < q`
/// (and `|x| < 1` when `p = q`). The `b_j`, `j ≤ m`, must not differ by integers.
/// For `x < 0` every `b_j`, `j ≤ m`, must be an integer so that `x^{b_j}` is real.
pub fn meijer_g_series(spec: &FoxHSpec, x: f64) -> Result<f64> {
    meijer_g_series_scaled(spec, x, 0.0)
}

/// `e^{ln_scale} · G(x)` by the residue sum, with the scale folded into every
/// term so that large gamma prefactors cancel before exponentiation.
pub fn meijer_g_series_scaled(spec: &FoxHSpec, x: f64, ln_scale: f64) -> Result<f64> {
    spec.validate()?;
    if !spec.is_meijer() {
        return Err(Error::InvalidParameter("Meijer G needs unit scales".into()));
    }
    let (p, q, m, n) = (spec.p(), spec.q(), spec.m, spec.n);
    if p > q || (p == q && x.abs() >= 1.0) {
        return Err(Error::Domain("residue series diverges for this order and argument".into()));
    }
    if x == 0.0 {
        return Err(Error::Domain("residue series needs x != 0".into()));
    }
    let a: Vec<f64> = spec.upper_params.iter().map(|t| t.0).collect();
    let b: Vec<f64> = spec.lower_params.iter().map(|t| t.0).collect();
    for h in 0..m {
        for j in 0..m {
            if j != h && ((b[j] - b[h]).fract() == 0.0) {
                return Err(Error::UnsupportedPole(2));
            }
        }
        if x < 0.0 && b[h].fract() != 0.0 {
            return Err(Error::Domain("negative argument needs integer b parameters".into()));
        }
    }
    let lx = x.abs().ln();
    let mut total = 0.0;
    let mut comp = 0.0;
    for h in 0..m {
        let bh = b[h];
        let mut small = 0usize;
        for k in 0..100_000usize {
            let kf = k as f64;
            let mut ln = ln_scale;
            let mut sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            ln -= super::gamma::ln_gamma(kf + 1.0);
            for (j, &bj) in b.iter().enumerate() {
                if j == h {
                    continue;
                }
                if j < m {
                    let (l, s) = ln_gamma_signed(bj - bh - kf)?;
                    ln += l;
                    sign *= s;
                } else {
                    let (l, s) = ln_abs_rgamma(1.0 - bj + bh + kf);
                    ln += l;
                    sign *= s;
                }
            }
            for (j, &aj) in a.iter().enumerate() {
                if j < n {
                    let (l, s) = ln_gamma_signed(1.0 - aj + bh + kf)?;
                    ln += l;
                    sign *= s;
                } else {
                    let (l, s) = ln_abs_rgamma(aj - bh - kf);
                    ln += l;
                    sign *= s;
                }
            }
            let e = bh + kf;
            ln += e * lx;
            if x < 0.0 && (e as i64) % 2 != 0 {
                sign = -sign;
            }
            let term = if sign == 0.0 { 0.0 } else { sign * ln.exp() };
            // Kahan summation
            let y = term - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
            if term.abs() <= 1e-17 * total.abs() || term == 0.0 && k > 0 {
                small += 1;
                if small > 3 {
                    break;
                }
            } else {
                small = 0;
            }
            if !term.is_finite() {
                return Err(Error::NumericalHealth("overflow in Meijer G residue series".into()));
            }
        }
    }
    Ok(total)
}
