//! Gamma-family kernels on the real line and in the complex plane.
//!
//! The complex log-gamma uses a Lanczos sum (g = 607/128, 15 terms) on the
//! right half-plane and the reflection formula on the left. The Lanczos form
//! keeps the analytic branch for `Re z >= 1/2`, so the imaginary part matches
//! the usual `loggamma` continuation there.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn lanczos_right(z: Complex64) -> Complex64 {
    // lnΓ(z) for Re z >= 1/2
    let zm = z - 1.0;
    let mut sum = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += *c / (zm + i as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    HALF_LN_2PI + (zm + 0.5) * t.ln() - t + sum.ln()
}

/// `ln sin(πz)`, stable for large `|Im z|`. The branch is not tracked; only
/// `exp` of the result is meaningful.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new((PI * z.re).sin(), 0.0).ln();
    }
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    let i = Complex64::i();
    let e = (2.0 * PI * i * z).exp();
    -i * PI * z + Complex64::new(0.0, 0.5).ln() + (Complex64::new(1.0, 0.0) - e).ln()
}

/// Principal-branch complex log-gamma.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && is_nonpositive_integer(z.re) {
        return Err(Error::GammaPole(z.re));
    }
    Ok(ln_gamma_complex_unchecked(z))
}

/// Complex log-gamma without the pole check. Returns a non-finite value at poles.
#[inline]
pub fn ln_gamma_complex_unchecked(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        lanczos_right(z)
    } else {
        let one = Complex64::new(1.0, 0.0);
        Complex64::new(LN_PI, 0.0) - ln_sin_pi(z) - lanczos_right(one - z)
    }
}

/// `ln|Γ(x)|` for real `x`, with the sign of `Γ(x)`.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if is_nonpositive_integer(x) {
        return Err(Error::GammaPole(x));
    }
    if x >= 0.5 {
        Ok((lanczos_right(Complex64::new(x, 0.0)).re, 1.0))
    } else {
        let s = (PI * x).sin();
        let (lg, _) = ln_gamma_signed(1.0 - x)?;
        Ok((LN_PI - s.abs().ln() - lg, s.signum()))
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    lanczos_right(Complex64::new(x, 0.0)).re
}

/// `Γ(x)` for real `x` off the poles.
pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sign) = ln_gamma_signed(x)?;
    Ok(sign * lg.exp())
}

/// Complex digamma `ψ(z)`.
pub fn digamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && is_nonpositive_integer(z.re) {
        return Err(Error::GammaPole(z.re));
    }
    if z.re < 0.5 {
        // ψ(z) = ψ(1-z) - π cot(πz)
        let one = Complex64::new(1.0, 0.0);
        let cot = (PI * z).cos() / (PI * z).sin();
        return Ok(digamma_complex(one - z)? - PI * cot);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 12.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    // asymptotic series with Bernoulli numbers B2..B12
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    Ok(acc + w.ln() - 0.5 * inv - series)
}

/// Real digamma.
pub fn digamma(x: f64) -> Result<f64> {
    Ok(digamma_complex(Complex64::new(x, 0.0))?.re)
}

/// Regularized lower incomplete gamma `P(a, x)` in log form, `ln P(a, x)`.
/// Accurate for tiny values of `P`.
pub fn ln_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        ln_series_p(a, x)
    } else {
        let q = cf_q(a, x);
        (-q).ln_1p()
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x)/Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        -ln_series_p(a, x).exp_m1()
    } else {
        cf_q(a, x)
    }
}

/// Error function through `erf(x) = P(1/2, x²)`.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let p = if x * x < 1.5 { ln_gamma_p(0.5, x * x).exp() } else { 1.0 - gamma_q(0.5, x * x) };
    p.copysign(x)
}

fn ln_series_p(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    a * x.ln() - x - ln_gamma(a) + sum.ln()
}

fn cf_q(a: f64, x: f64) -> f64 {
    // modified Lentz on the Legendre continued fraction
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}
