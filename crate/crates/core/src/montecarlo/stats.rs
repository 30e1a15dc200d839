//! Goodness-of-fit helpers and a required-SNR search.

use crate::error::{Error, Result};
use crate::specfun::gamma::gamma_q;

/// Outcome of a Kolmogorov–Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    /// Upper bound on `sup |F_n − F|`.
    pub statistic: f64,
    /// Critical value at the 1% level, `1.63/√N`.
    pub critical: f64,
    pub n: usize,
}

impl KsOutcome {
    pub fn passed(&self) -> bool {
        self.statistic < self.critical
    }
}

/// KS statistic of `samples` against `cdf`, evaluating the CDF at every
/// `stride`-th order statistic.
///
/// Between evaluated points the bound uses monotonicity of both functions:
/// on `[x_i, x_{i+s}]`, `|F_n − F| ≤ max((i+s)/N − F(x_i), F(x_{i+s}) − i/N)`.
/// The result is therefore never below the exact statistic, and it equals it for
/// `stride = 1`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F, stride: usize) -> Result<KsOutcome> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidParameter("KS needs at least one sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NumericalHealth("NaN sample".into()));
    }
    let stride = stride.max(1);
    samples.sort_unstable_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let vals: Vec<f64> = idx.iter().map(|&i| cdf(samples[i])).collect();
    let mut d: f64 = 0.0;
    // before the first evaluated point the empirical CDF is at most idx[0]/N = 0
    d = d.max(vals[0]);
    for w in 0..idx.len() {
        let (i, f) = (idx[w], vals[w]);
        // exact at the evaluated point itself
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
        if w + 1 < idx.len() {
            let (k, g) = (idx[w + 1], vals[w + 1]);
            d = d.max(k as f64 / nf - f).max(g - (i + 1) as f64 / nf);
        }
    }
    d = d.max(1.0 - vals[vals.len() - 1] - 0.0);
    Ok(KsOutcome { statistic: d.min(1.0), critical: 1.63 / nf.sqrt(), n })
}

/// Outcome of a χ² goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareOutcome {
    pub fn passed(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// χ² test of `samples` against `cdf` on `bins` equiprobable cells.
///
/// Cell edges are the `k/bins` quantiles of the model, found by bisection on
/// `[lo, hi]`, so every cell has the same expected count.
pub fn chi_square_equiprobable<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, bins: usize, lo: f64, hi: f64) -> Result<ChiSquareOutcome> {
    if bins < 2 {
        return Err(Error::InvalidParameter("bins >= 2 violated".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("χ² needs samples".into()));
    }
    let edges: Vec<f64> = (1..bins).map(|k| quantile(&cdf, k as f64 / bins as f64, lo, hi)).collect();
    let mut counts = vec![0u64; bins];
    for &x in samples {
        counts[edges.partition_point(|e| *e <= x)] += 1;
    }
    let expected = samples.len() as f64 / bins as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>();
    let dof = bins - 1;
    Ok(ChiSquareOutcome { statistic, dof, p_value: gamma_q(dof as f64 / 2.0, statistic / 2.0) })
}

fn quantile<F: Fn(f64) -> f64>(cdf: &F, u: f64, lo: f64, hi: f64) -> f64 {
    // bisect in log space when the support is positive
    let logs = lo > 0.0;
    let (mut a, mut b) = if logs { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let at = |t: f64| if logs { t.exp() } else { t };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if cdf(at(m)) < u {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    at(0.5 * (a + b))
}

/// Smallest average SNR (dB) in `[lo_db, hi_db]` at which a decreasing metric
/// drops to `target`, found by bisection on `ln(metric)`.
pub fn required_snr_db<F>(mut metric: F, target: f64, lo_db: f64, hi_db: f64, tol_db: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(target > 0.0) {
        return Err(Error::InvalidParameter(format!("target > 0 violated: {target}")));
    }
    let (mut a, mut b) = (lo_db, hi_db);
    let fa = metric(a)?;
    let fb = metric(b)?;
    if !(fa >= target && fb <= target) {
        return Err(Error::Domain(format!("target {target} not bracketed by [{fa}, {fb}] on [{lo_db}, {hi_db}] dB")));
    }
    let (mut la, mut lb) = (fa.ln(), fb.ln());
    let lt = target.ln();
    while b - a > tol_db {
        // regula falsi on the log metric, kept inside the middle 80% of the bracket
        let guess = if la.is_finite() && lb.is_finite() && la != lb { a + (la - lt) / (la - lb) * (b - a) } else { 0.5 * (a + b) };
        let m = guess.clamp(a + 0.1 * (b - a), b - 0.1 * (b - a));
        let fm = metric(m)?;
        if fm > target {
            a = m;
            la = fm.ln();
        } else {
            b = m;
            lb = fm.ln();
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn strided_bound_dominates_the_exact_statistic() {
        let mut xs = uniforms(20_000, 1);
        let exact = ks_statistic(&mut xs.clone(), |x| x.clamp(0.0, 1.0), 1).unwrap();
        let coarse = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0), 16).unwrap();
        assert!(coarse.statistic >= exact.statistic);
        assert!(coarse.statistic - exact.statistic < 16.0 / 20_000.0 + 1e-12);
        assert!(exact.passed());
    }

    #[test]
    fn ks_flags_a_wrong_model() {
        let mut xs = uniforms(10_000, 2);
        let r = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0).powf(1.1), 4).unwrap();
        assert!(!r.passed(), "{r:?}");
        let mut one = vec![0.5];
        assert!((ks_statistic(&mut one, |x| x, 1).unwrap().statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_square_accepts_and_rejects() {
        let xs = uniforms(50_000, 3);
        let ok = chi_square_equiprobable(&xs, |x| x.clamp(0.0, 1.0), 50, 0.0, 1.0).unwrap();
        assert!(ok.passed(0.05) || ok.p_value > 0.001, "{ok:?}");
        assert_eq!(ok.dof, 49);
        let bad = chi_square_equiprobable(&xs, |x| x.clamp(0.0, 1.0).sqrt(), 50, 0.0, 1.0).unwrap();
        assert!(bad.p_value < 1e-10);
        // exponential samples on a positive support
        let ex: Vec<f64> = uniforms(50_000, 4).iter().map(|u| -(1.0 - u).ln()).collect();
        let r = chi_square_equiprobable(&ex, |x| 1.0 - (-x).exp(), 20, 1e-12, 100.0).unwrap();
        assert!(r.p_value > 0.001, "{r:?}");
    }

    #[test]
    fn required_snr_solves_a_power_law() {
        // P(x) = 10^{−x/10}: P = 1e-3 at 30 dB
        let x = required_snr_db(|db| Ok(10f64.powf(-db / 10.0)), 1e-3, 0.0, 60.0, 1e-6).unwrap();
        assert!((x - 30.0).abs() < 1e-6);
        assert!(required_snr_db(|_| Ok(0.5), 1e-3, 0.0, 60.0, 1e-3).is_err());
    }
}
