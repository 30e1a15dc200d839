//! Self-validation suite with a measured margin per invariant.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfthz_core::analytic::exact::ConditioningOracle;
use rfthz_core::analytic::{
    asymptotic_psi, average_ber, ergodic_capacity, outage_probability, AnalyticOptions, Metric, ModulationParams,
};
use rfthz_core::channels::pointing::{cdf_pointing, pdf_pointing, sample_pointing};
use rfthz_core::channels::rf::{cdf_snr_rf, pdf_alpha_kms, sample_alpha_kms, sample_snr_rf};
use rfthz_core::channels::thz::{cdf_alpha_mu, cdf_snr_thz, pdf_alpha_mu, pdf_snr_thz, sample_alpha_mu, sample_snr_thz};
use rfthz_core::channels::{PointingParams, RfFadingParams, ThzFadingParams};
use rfthz_core::linkbudget::semi_blind_c;
use rfthz_core::montecarlo::stats::{chi_square_equiprobable, ks_statistic};
use rfthz_core::montecarlo::{
    batch_rng, estimate_ber, estimate_capacity, estimate_outage, estimate_semi_blind_c, sample_end_to_end, SimConfig,
};
use rfthz_core::scenario::{outage_scenario, ber_scenario, gamma_th, BORESIGHT};
use rfthz_core::specfun::foxh::{fox_h, fox_h_with, meijer_g, FoxHSpec};
use rfthz_core::specfun::hyper::hyp1f1;
use rfthz_core::specfun::quad::integrate;
use rfthz_core::specfun::{fox_h_bivariate, gamma, FoxHBivariateSpec, QuadOptions};
use rfthz_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// Deliberate faults for exercising the suite itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Faults {
    /// Move the second contour of the invariance check across a pole.
    pub abscissa: bool,
}

/// One invariant: `measured` must not exceed `limit` (or, for p-values, stay above it).
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub pass: bool,
    pub note: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, limit, pass: measured <= limit, note: String::new() }
    }

    fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, limit, pass: measured >= limit, note: String::new() }
    }

    fn failed(name: &str, why: String) -> Self {
        Self { name: name.into(), measured: f64::NAN, limit: f64::NAN, pass: false, note: why }
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        if self.note.is_empty() {
            format!("{tag} {}: measured {:.3e}, limit {:.3e}", self.name, self.measured, self.limit)
        } else {
            format!("{tag} {}: {}", self.name, self.note)
        }
    }
}

fn guard(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, format!("error: {e}")))
}

fn opts() -> AnalyticOptions {
    AnalyticOptions { cross_check: false, ..Default::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// z-score of an analytic value against a Monte-Carlo estimate.
fn z(analytic: f64, value: f64, se: Option<f64>) -> f64 {
    match se {
        Some(s) if s > 0.0 => (analytic - value).abs() / s,
        _ if analytic == value => 0.0,
        _ => f64::INFINITY,
    }
}

/// Standard error of a proportion under the analytic value, which stays
/// meaningful when every draw lands on the same side of the threshold.
fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn run(level: Level, faults: Faults, seed: u64, workers: usize) -> Vec<Check> {
    let n_mc: u64 = if level == Level::Quick { 200_000 } else { 10_000_000 };
    let sim = SimConfig { n_samples: n_mc, seed, batch_size: 1 << 16, workers };
    let mut out = Vec::new();
    let t = Instant::now();

    out.push(guard("fox-h exponential reduction", || {
        let spec = FoxHSpec::new(1, 0, vec![], vec![(0.0, 1.0)])?;
        let mut w: f64 = 0.0;
        for x in [0.1, 1.0, 5.0] {
            w = w.max(rel(fox_h(&spec, x)?.value, (-x).exp()));
        }
        Ok(Check::at_most("fox-h exponential reduction", w, 1e-9))
    }));
    out.push(guard("meijer-g kummer reduction", || {
        let mut w: f64 = 0.0;
        for (a, b, x) in [(2.0, 1.5, 0.7), (0.7, 2.4, 3.0)] {
            let spec = FoxHSpec::meijer(1, 1, &[1.0 - a], &[0.0, 1.0 - b])?;
            w = w.max(rel(meijer_g(&spec, x)?.value, gamma(a)? / gamma(b)? * hyp1f1(a, b, -x)?));
        }
        Ok(Check::at_most("meijer-g kummer reduction", w, 1e-9))
    }));
    out.push(guard("cauchy contour invariance", || {
        let spec = FoxHSpec::new(2, 0, vec![(2.5, 1.5)], vec![(0.0, 1.0), (1.1, 1.5)])?;
        let shifted = if faults.abscissa { 0.4 } else { -2.0 };
        let q = QuadOptions::default();
        let a = fox_h_with(&spec, 0.8, Some(-0.3), &q)?.value;
        let b = fox_h_with(&spec, 0.8, Some(shifted), &q)?.value;
        Ok(Check::at_most("cauchy contour invariance", rel(b, a), 1e-7))
    }));
    out.push(guard("bivariate separability", || {
        let biv = FoxHBivariateSpec {
            m2: 1,
            n2: 1,
            m3: 2,
            block1_upper: vec![(0.3, 1.0)],
            block1_lower: vec![(0.0, 1.0), (-0.5, 1.0)],
            block2_lower: vec![(0.0, 1.0), (0.4, 1.5)],
            ..Default::default()
        };
        let h1 = FoxHSpec::new(1, 1, vec![(0.3, 1.0)], vec![(0.0, 1.0), (-0.5, 1.0)])?;
        let h2 = FoxHSpec::new(2, 0, vec![], vec![(0.0, 1.0), (0.4, 1.5)])?;
        let p = fox_h(&h1, 0.6)?.value * fox_h(&h2, 1.7)?.value;
        Ok(Check::at_most("bivariate separability", rel(fox_h_bivariate(&biv, 0.6, 1.7)?.value, p), 1e-6))
    }));

    let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, 1.0).expect("fixed parameters");
    let thz = ThzFadingParams::new(1.5, 1.2, 1.0, 1.0).expect("fixed parameters");
    let pt0 = PointingParams::from_aperture(0.1, 0.6087, 0.0, 0.15).expect("fixed parameters");
    let pt = PointingParams::from_aperture(0.1, 0.6087, BORESIGHT, 0.15).expect("fixed parameters");

    out.push(guard("elementary densities normalise", || {
        let mut w: f64 = 0.0;
        w = w.max((integrate(|x| pdf_alpha_mu(&thz, x).unwrap_or(0.0), 0.0, 20.0, 1e-14, 1e-12)?.value - 1.0).abs());
        w = w.max((integrate(|x| pdf_alpha_kms(&rf, x).unwrap_or(0.0), 0.0, 10.0, 1e-14, 1e-12)?.value - 1.0).abs());
        w = w.max((integrate(|h| pdf_pointing(&pt, h).unwrap_or(0.0), 0.0, pt.s0, 1e-14, 1e-11)?.value - 1.0).abs());
        Ok(Check::at_most("elementary densities normalise", w, 1e-6))
    }));
    out.push(guard("thz snr density matches its cdf", || {
        let k = thz.snr_scale(&pt);
        let mut w: f64 = 0.0;
        for g in [0.05 * k, 0.5 * k] {
            let f = integrate(|x| if x > 0.0 { pdf_snr_thz(&thz, &pt, x).map(|s| s.value).unwrap_or(0.0) } else { 0.0 }, 0.0, g, 1e-12, 1e-9)?;
            w = w.max((f.value - cdf_snr_thz(&thz, &pt, g)?.value).abs());
        }
        Ok(Check::at_most("thz snr density matches its cdf", w, 1e-6))
    }));
    out.push(guard("boresight continuity", || {
        let near = PointingParams::from_aperture(0.1, 0.6087, 1e-9, 0.15)?;
        let k = thz.snr_scale(&pt0);
        let mut w: f64 = 0.0;
        for g in [0.01 * k, 0.1 * k, k] {
            w = w.max((cdf_snr_thz(&thz, &pt0, g)?.value - cdf_snr_thz(&thz, &near, g)?.value).abs());
        }
        w = w.max((pdf_pointing(&pt0, 0.5 * pt0.s0)? - pdf_pointing(&near, 0.5 * pt0.s0)?).abs() * 0.5 * pt0.s0);
        Ok(Check::at_most("boresight continuity", w, 1e-6))
    }));
    out.push(guard("outage: contour vs conditioning", || {
        let sys = outage_scenario(1.2, 0.15, 20.0)?;
        let a = outage_probability(&sys, gamma_th(), &opts())?.value;
        let b = ConditioningOracle::new(&sys)?.cdf(gamma_th());
        Ok(Check::at_most("outage: contour vs conditioning", rel(a, b), 1e-6))
    }));
    out.push(guard("asymptote ratio at 60 dB", || {
        let sys = outage_scenario(1.2, 0.15, 60.0)?;
        let a = asymptotic_psi(&sys, Metric::Outage { gamma_th: gamma_th() }, &opts().quad)?;
        let e = outage_probability(&sys, gamma_th(), &opts())?.value;
        Ok(Check::at_most("asymptote ratio at 60 dB", rel(a, e), 0.1))
    }));
    out.push(guard("outage: analytic vs monte-carlo (se)", || {
        let sys = outage_scenario(1.2, 0.15, 30.0)?;
        let a = outage_probability(&sys, gamma_th(), &opts())?.value;
        let m = estimate_outage(&sys, gamma_th(), &sim)?;
        Ok(Check::at_most("outage: analytic vs monte-carlo (se)", z(a, m.value, Some(binomial_se(a, n_mc))), 3.0))
    }));
    out.push(guard("ber: analytic vs monte-carlo (se)", || {
        let sys = ber_scenario(2.6, 30.0)?;
        let md = ModulationParams::default();
        let a = average_ber(&sys, md, &opts())?.value;
        let m = estimate_ber(&sys, md, &sim)?;
        Ok(Check::at_most("ber: analytic vs monte-carlo (se)", z(a, m.value, m.std_error), 3.0))
    }));
    out.push(guard("capacity: analytic vs monte-carlo (se)", || {
        let sys = outage_scenario(2.4, 0.05, 20.0)?;
        let a = ergodic_capacity(&sys, &opts())?.value;
        let m = estimate_capacity(&sys, &sim)?;
        Ok(Check::at_most("capacity: analytic vs monte-carlo (se)", z(a, m.value, m.std_error), 3.0))
    }));
    out.push(guard("semi-blind C: quadrature vs monte-carlo (se)", || {
        let r = rf.with_gamma_bar(100.0)?;
        let m = estimate_semi_blind_c(&r, &sim)?;
        Ok(Check::at_most("semi-blind C: quadrature vs monte-carlo (se)", z(semi_blind_c(&r)?.c, m.value, m.std_error), 3.0))
    }));
    out.push(guard("monte-carlo worker independence", || {
        let sys = outage_scenario(1.2, 0.15, 10.0)?;
        let small = SimConfig { n_samples: 100_000, ..sim };
        let a = estimate_outage(&sys, gamma_th(), &SimConfig { workers: 1, ..small })?.value;
        let b = estimate_outage(&sys, gamma_th(), &SimConfig { workers: 3, ..small })?.value;
        Ok(Check::at_most("monte-carlo worker independence", (a - b).abs(), 0.0))
    }));
    out.push(guard("monte-carlo 1/sqrt(N) scaling", || {
        let sys = outage_scenario(1.2, 0.15, 10.0)?;
        let a = estimate_capacity(&sys, &SimConfig { n_samples: 50_000, ..sim })?.std_error.unwrap_or(f64::NAN);
        let b = estimate_capacity(&sys, &SimConfig { n_samples: 200_000, ..sim })?.std_error.unwrap_or(f64::NAN);
        Ok(Check::at_most("monte-carlo 1/sqrt(N) scaling", (a / b / 2.0 - 1.0).abs(), 0.2))
    }));

    if level == Level::Full {
        let rf10 = rf.with_gamma_bar(10.0).expect("fixed parameters");
        type Sampler<'a> = Box<dyn Fn(&mut ChaCha8Rng) -> f64 + 'a>;
        type Cdf<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
        let suites: Vec<(&str, Sampler, Cdf, usize)> = vec![
            ("ks alpha-mu", Box::new(|r| sample_alpha_mu(&thz, r)), Box::new(|x| cdf_alpha_mu(&thz, x)), 1),
            ("ks alpha-kms", Box::new(|r| sample_alpha_kms(&rf, r)), Box::new(|x| cdf_snr_rf(&rf, x * x)), 4),
            ("ks pointing s=0", Box::new(|r| sample_pointing(&pt0, r)), Box::new(|h| cdf_pointing(&pt0, h)), 1),
            ("ks pointing s>0", Box::new(|r| sample_pointing(&pt, r)), Box::new(|h| cdf_pointing(&pt, h)), 2),
            ("ks rf snr", Box::new(|r| sample_snr_rf(&rf10, r)), Box::new(|g| cdf_snr_rf(&rf10, g)), 4),
            (
                "ks thz snr",
                Box::new(|r| sample_snr_thz(&thz, &pt, r)),
                Box::new(|g| cdf_snr_thz(&thz, &pt, g).map(|s| s.value).unwrap_or(f64::NAN)),
                300,
            ),
        ];
        for (name, draw, cdf, stride) in suites {
            out.push(guard(name, || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut xs: Vec<f64> = (0..1_000_000).map(|_| draw(&mut rng)).collect();
                let r = ks_statistic(&mut xs, cdf, stride)?;
                Ok(Check::at_most(name, r.statistic, r.critical))
            }));
        }
        out.push(guard("chi2 thz snr histogram", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..100_000).map(|_| sample_snr_thz(&thz, &pt, &mut rng)).collect();
            let k = thz.snr_scale(&pt);
            let r = chi_square_equiprobable(&xs, |g| cdf_snr_thz(&thz, &pt, g).map(|s| s.value).unwrap_or(f64::NAN), 50, k * 1e-12, k * 1e3)?;
            Ok(Check::at_least("chi2 thz snr histogram", r.p_value, 0.05))
        }));
        out.push(guard("chi2 end-to-end histogram", || {
            let sys = outage_scenario(1.2, 0.15, 10.0)?;
            let oracle = ConditioningOracle::new(&sys)?;
            let mut rng = batch_rng(seed, 0);
            let xs: Vec<f64> = (0..100_000).map(|_| sample_end_to_end(&sys, &mut rng)).collect();
            let r = chi_square_equiprobable(&xs, |z| oracle.cdf(z), 50, 1e-12, 1e6)?;
            Ok(Check::at_least("chi2 end-to-end histogram", r.p_value, 0.05))
        }));
    }
    log::info!("validation took {:.1} s", t.elapsed().as_secs_f64());
    out
}
