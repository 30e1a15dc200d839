//! Kummer's confluent hypergeometric function `₁F₁(a; b; z)` for real arguments.

use super::gamma::ln_gamma_signed;
use crate::error::{Error, Result};

const ASYMPTOTIC_SWITCH: f64 = 50.0;
const MAX_TERMS: usize = 100_000;

/// `ln ₁F₁(a; b; z)` for `a, b > 0`, `z >= 0` (the function is positive there).
pub fn ln_hyp1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && z >= 0.0) {
        return Err(Error::Domain(format!("ln 1F1 needs a, b > 0 and z >= 0, got ({a}, {b}, {z})")));
    }
    if z > ASYMPTOTIC_SWITCH {
        if let Some(v) = ln_asymptotic(a, b, z) {
            return Ok(v);
        }
    }
    let (sum, _) = series(a, b, z)?;
    Ok(sum.ln())
}

/// `₁F₁(a; b; z)` for real arguments, `b` off the non-positive integers.
/// Negative `z` goes through Kummer's transformation when that avoids cancellation.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    if b <= 0.0 && b == b.round() {
        return Err(Error::Domain(format!("1F1 undefined for b = {b}")));
    }
    if z < 0.0 {
        // e^z 1F1(b − a; b; −z); positive terms when b > a
        return Ok(z.exp() * hyp1f1(b - a, b, -z)?);
    }
    if a > 0.0 && b > 0.0 {
        return Ok(ln_hyp1f1(a, b, z)?.exp());
    }
    Ok(series(a, b, z)?.0)
}

fn series(a: f64, b: f64, z: f64) -> Result<(f64, usize)> {
    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut term = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term == 0.0 || (term.abs() < 1e-17 * sum.abs() && kf + 1.0 > z - b) {
            return Ok((sum, k + 1));
        }
        if !sum.is_finite() {
            return Err(Error::NumericalHealth("1F1 series overflow".into()));
        }
    }
    Err(Error::SeriesNotConverged { partial: sum, last_term: term, terms: MAX_TERMS })
}

fn ln_asymptotic(a: f64, b: f64, z: f64) -> Option<f64> {
    // 1F1 ~ Γ(b)/Γ(a) e^z z^{a−b} Σ (b−a)_k (1−a)_k / k! z^{−k}
    let mut sum = 1.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        let kf = k as f64;
        term *= (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * z);
        if term.abs() > prev {
            return None;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-16 * sum.abs() {
            let (lgb, _) = ln_gamma_signed(b).ok()?;
            let (lga, _) = ln_gamma_signed(a).ok()?;
            return Some(lgb - lga + z + (a - b) * z.ln() + sum.ln());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn elementary_reductions() {
        // 1F1(a; a; z) = e^z
        assert_relative_eq!(hyp1f1(1.7, 1.7, 3.0).unwrap(), 3.0_f64.exp(), max_relative = 1e-14);
        // 1F1(1; 2; z) = (e^z − 1)/z
        let z: f64 = 0.37;
        assert_relative_eq!(hyp1f1(1.0, 2.0, z).unwrap(), z.exp_m1() / z, max_relative = 1e-14);
        assert_relative_eq!(hyp1f1(1.0, 2.0, -z).unwrap(), (-z).exp_m1() / -z, max_relative = 1e-13);
    }

    #[test]
    fn asymptotic_branch_matches_series() {
        // mpmath.hyp1f1(2, 2.2, 80)
        let v = ln_hyp1f1(2.0, 2.2, 80.0).unwrap();
        assert_relative_eq!(v, 79.218_039_009_637_743, max_relative = 1e-13);
        let (s, _) = series(2.0, 2.2, 80.0).unwrap();
        assert_relative_eq!(v, s.ln(), max_relative = 1e-13);
        let w = ln_hyp1f1(2.0, 2.0, 400.0).unwrap();
        assert_relative_eq!(w, 400.0, max_relative = 1e-14);
    }

    #[test]
    fn high_precision_value() {
        // mpmath.hyp1f1(2, 1.2, 0.8*7.5)
        assert_relative_eq!(hyp1f1(2.0, 1.2, 6.0).unwrap(), 1_760.221_658_944_241_8, max_relative = 1e-12);
    }
}
