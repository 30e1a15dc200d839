//! Acceptance suite. Each criterion prints one PASS/FAIL line with its measured
//! margin; the process exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfthz_core::analytic::exact::ConditioningOracle;
use rfthz_core::analytic::{
    asymptotic_psi, average_ber, diversity_order, ergodic_capacity, outage_probability, pdf_end_to_end,
    AnalyticOptions, Metric, ModulationParams, SystemModel,
};
use rfthz_core::channels::pointing::{cdf_pointing, pdf_pointing, sample_pointing};
use rfthz_core::channels::rf::{cdf_snr_rf, pdf_alpha_kms, pdf_snr_rf, pdf_snr_rf_elementary, sample_alpha_kms, sample_snr_rf};
use rfthz_core::channels::thz::{cdf_alpha_mu, cdf_snr_thz, pdf_alpha_mu, pdf_snr_thz, sample_alpha_mu, sample_snr_thz};
use rfthz_core::channels::{PointingParams, RfFadingParams, ThzFadingParams};
use rfthz_core::montecarlo::stats::{ks_statistic, required_snr_db};
use rfthz_core::montecarlo::{batch_rng, estimate_outage, estimate_outage_af_df, sample_end_to_end, SimConfig};
use rfthz_core::scenario::{outage_scenario, ber_scenario, capacity_scenario, gamma_th, BORESIGHT};
use rfthz_core::specfun::foxh::{fox_h, fox_h_with, meijer_g, FoxHSpec};
use rfthz_core::specfun::hyper::hyp1f1;
use rfthz_core::specfun::quad::{integrate, integrate_log_axis, GaussLegendre};
use rfthz_core::specfun::{fox_h_bivariate, gamma, FoxHBivariateSpec, QuadOptions};
use rfthz_core::Result;

const SEED: u64 = 20_211_012;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn opts() -> AnalyticOptions {
    AnalyticOptions { cross_check: false, ..Default::default() }
}

fn sim(n: u64) -> SimConfig {
    SimConfig { n_samples: n, seed: SEED, ..SimConfig::default() }
}

const OUTAGE_CURVES: [(f64, f64); 4] = [(1.2, 0.05), (1.2, 0.15), (2.4, 0.05), (2.4, 0.15)];

fn analytic_outage(mu_t: f64, sigma: f64, db: f64) -> Result<f64> {
    Ok(outage_probability(&outage_scenario(mu_t, sigma, db)?, gamma_th(), &opts())?.value)
}

fn c1_analytic_vs_simulation() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for (mu_t, sigma) in OUTAGE_CURVES {
        for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
            let sys = outage_scenario(mu_t, sigma, db)?;
            let a = outage_probability(&sys, gamma_th(), &opts())?.value;
            let m = estimate_outage(&sys, gamma_th(), &sim(10_000_000))?;
            // score test: the null standard error stays finite when the estimate saturates
            let se = (a * (1.0 - a) / 1e7).sqrt();
            let z = if se > 0.0 { (a - m.value).abs() / se } else if a == m.value { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            if z > 3.0 {
                fails.push(format!("mu_t={mu_t} sigma={sigma} {db} dB: {a:.4e} vs {:.4e} ({z:.2} se)", m.value));
            }
        }
    }
    Ok(verdict(fails.is_empty(), format!("max deviation {worst:.2} null se over 20 points (limit 3) {}", fails.join("; "))))
}

fn c2_jitter_penalty() -> Result<Verdict> {
    let narrow = required_snr_db(|db| analytic_outage(1.2, 0.05, db), 1e-3, 0.0, 100.0, 0.01)?;
    let wide = required_snr_db(|db| analytic_outage(1.2, 0.15, db), 1e-3, 0.0, 100.0, 0.01)?;
    let pen = wide - narrow;
    Ok(verdict(
        (pen - 3.0).abs() <= 1.0,
        format!("penalty {pen:.2} dB ({narrow:.2} -> {wide:.2} dB at P_out 1e-3), band 3 +/- 1"),
    ))
}

fn c3_ber_nonlinearity() -> Result<Verdict> {
    let m = ModulationParams::default();
    let low = average_ber(&ber_scenario(1.4, 40.0)?, m, &opts())?.value;
    let high = average_ber(&ber_scenario(2.6, 40.0)?, m, &opts())?.value;
    let ratio = low / high;
    let ok = (5.0..=20.0).contains(&ratio) && (1e-5..=4e-5).contains(&high);
    Ok(verdict(
        ok,
        format!("BER {low:.3e} -> {high:.3e}, factor {ratio:.2} (band [5, 20]); BER(2.6) target 2e-5 within x2"),
    ))
}

fn c4_capacity_anchor() -> Result<Verdict> {
    let near = ergodic_capacity(&capacity_scenario(20.0, 100.0)?.0, &opts())?.value;
    let far = ergodic_capacity(&capacity_scenario(20.0, 200.0)?.0, &opts())?.value;
    let gap = near - far;
    let ok = (far - 13.0).abs() <= 1.5 && (gap - 3.0).abs() <= 1.0;
    Ok(verdict(
        ok,
        format!("C(200 m) = {far:.3} (13 +/- 1.5), C(100 m) - C(200 m) = {gap:.3} (3 +/- 1) bits/s/Hz"),
    ))
}

/// Least-squares slope of `−log₁₀ P` against `γ̄/10` over 50..70 dB.
fn outage_slope(mu_t: f64, sigma: f64) -> Result<f64> {
    let xs = [5.0, 5.5, 6.0, 6.5, 7.0];
    let mut ys = Vec::new();
    for x in xs {
        ys.push(-analytic_outage(mu_t, sigma, 10.0 * x)?.log10());
    }
    let mx = xs.iter().sum::<f64>() / 5.0;
    let my = ys.iter().sum::<f64>() / 5.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

fn c5_diversity_order() -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut slopes = Vec::new();
    for (mu_t, sigma) in OUTAGE_CURVES {
        let d = diversity_order(&outage_scenario(mu_t, sigma, 60.0)?);
        let slope = outage_slope(mu_t, sigma)?;
        let rel = (slope / d - 1.0).abs();
        ok &= rel <= 0.15;
        slopes.push((d, slope));
        parts.push(format!("mu_t={mu_t} sigma={sigma}: {slope:.3} vs {d:.2} ({:.1}%)", 100.0 * rel));
    }
    // the pointing branch does not lead in any of the four, so jitter leaves the slope alone
    for pair in slopes.chunks(2) {
        let (d, a) = pair[0];
        let b = pair[1].1;
        ok &= (a - b).abs() <= 0.15 * d;
    }
    ok &= (slopes[0].0 - 0.9).abs() < 1e-12 && (slopes[2].0 - 1.8).abs() < 1e-12;
    Ok(verdict(ok, parts.join("; ")))
}

fn c6_asymptote() -> Result<Verdict> {
    let mut systems: Vec<(String, SystemModel)> = Vec::new();
    for (mu_t, sigma) in OUTAGE_CURVES {
        systems.push((format!("outage mu_t={mu_t} sigma={sigma}"), outage_scenario(mu_t, sigma, 60.0)?));
    }
    for alpha_t in [1.4, 2.6] {
        systems.push((format!("ber alpha_t={alpha_t}"), ber_scenario(alpha_t, 60.0)?));
    }
    let m = ModulationParams::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (name, sys) in &systems {
        let o = asymptotic_psi(sys, Metric::Outage { gamma_th: gamma_th() }, &opts().quad)?
            / outage_probability(sys, gamma_th(), &opts())?.value;
        let b = asymptotic_psi(sys, Metric::Ber(m), &opts().quad)? / average_ber(sys, m, &opts())?.value;
        for r in [o, b] {
            ok &= (0.9..=1.1).contains(&r);
            worst = worst.max((r - 1.0).abs());
        }
        if !ok {
            return Ok(verdict(false, format!("{name}: outage ratio {o:.4}, BER ratio {b:.4}")));
        }
    }
    Ok(verdict(ok, format!("12 ratios, max |ratio - 1| = {worst:.2e} (limit 0.1)")))
}

fn c7_special_functions() -> Result<Verdict> {
    let mut worst = [0.0f64; 4];
    let exp = FoxHSpec::new(1, 0, vec![], vec![(0.0, 1.0)])?;
    for x in [0.1, 1.0, 2.0, 5.0] {
        worst[0] = worst[0].max((fox_h(&exp, x)?.value / (-x).exp() - 1.0).abs());
    }
    for (a, b, x) in [(1.0, 1.0, 0.5), (2.0, 2.0, 1.3), (2.0, 1.5, 0.7), (0.7, 2.4, 3.0)] {
        let spec = FoxHSpec::meijer(1, 1, &[1.0 - a], &[0.0, 1.0 - b])?;
        let r = gamma(a)? / gamma(b)? * hyp1f1(a, b, -x)?;
        worst[1] = worst[1].max((meijer_g(&spec, x)?.value / r - 1.0).abs());
        worst[1] = worst[1].max((fox_h(&spec, x)?.value / r - 1.0).abs());
    }
    let spec = FoxHSpec::new(2, 0, vec![(2.5, 1.5)], vec![(0.0, 1.0), (1.1, 1.5)])?;
    let q = QuadOptions::default();
    for x in [0.3, 0.8, 2.0] {
        let base = fox_h_with(&spec, x, Some(-0.3), &q)?.value;
        for c in [-0.9, -2.0, -3.7] {
            worst[2] = worst[2].max((fox_h_with(&spec, x, Some(c), &q)?.value / base - 1.0).abs());
        }
    }
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
    for (x, y) in [(0.6, 1.7), (2.0, 0.4)] {
        let p = fox_h(&h1, x)?.value * fox_h(&h2, y)?.value;
        worst[3] = worst[3].max((fox_h_bivariate(&biv, x, y)?.value / p - 1.0).abs());
    }
    let ok = worst[0] <= 1e-9 && worst[1] <= 1e-9 && worst[2] <= 1e-7 && worst[3] <= 1e-6;
    Ok(verdict(
        ok,
        format!(
            "exponential {:.1e} (1e-9), Meijer-G {:.1e} (1e-9), contour shift {:.1e} (1e-7), separable bivariate {:.1e} (1e-6)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn ks_of<S, F>(name: &str, mut draw: S, cdf: F, stride: usize, out: &mut Vec<String>) -> Result<bool>
where
    S: FnMut(&mut ChaCha8Rng) -> f64,
    F: Fn(f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut xs: Vec<f64> = (0..1_000_000).map(|_| draw(&mut rng)).collect();
    let r = ks_statistic(&mut xs, cdf, stride)?;
    out.push(format!("{name} D={:.2e}", r.statistic));
    Ok(r.passed())
}

fn c8_distributions() -> Result<Verdict> {
    let mut ok = true;
    let mut notes = Vec::new();
    let rf = RfFadingParams::new(1.8, 4.0, 2.0, 2.0, 1.0)?;
    let thz = ThzFadingParams::new(1.5, 1.2, 1.0, 1.0)?;
    let pt0 = PointingParams::from_aperture(0.1, 0.6087, 0.0, 0.15)?;
    let pt = PointingParams::from_aperture(0.1, 0.6087, BORESIGHT, 0.15)?;

    // elementary densities
    let mut elem: f64 = 0.0;
    elem = elem.max((integrate(|x| pdf_alpha_mu(&thz, x).unwrap_or(0.0), 0.0, 20.0, 1e-14, 1e-12)?.value - 1.0).abs());
    elem = elem.max((integrate(|x| pdf_alpha_kms(&rf, x).unwrap_or(0.0), 0.0, 10.0, 1e-14, 1e-12)?.value - 1.0).abs());
    elem = elem.max((integrate_log_axis(|g| pdf_snr_rf_elementary(&rf, g).unwrap_or(0.0), 1e-12, 1e4, 1e-10)?.value - 1.0).abs());
    for p in [&pt0, &pt] {
        elem = elem.max((integrate(|h| pdf_pointing(p, h).unwrap_or(0.0), 0.0, p.s0, 1e-14, 1e-11)?.value - 1.0).abs());
    }
    ok &= elem <= 1e-6;
    // Fox-H based densities
    let mut fox: f64 = 0.0;
    fox = fox.max((integrate_log_axis(|g| pdf_snr_rf(&rf, g).unwrap_or(0.0), 1e-12, 1e4, 1e-6)?.value - 1.0).abs());
    let k = thz.snr_scale(&pt);
    fox = fox.max(
        (integrate_log_axis(|g| pdf_snr_thz(&thz, &pt, g).map(|s| s.value).unwrap_or(0.0), k * 1e-14, k * 1e4, 1e-6)?.value - 1.0)
            .abs(),
    );
    // end-to-end density on a fixed log-axis rule over [1e-4, 1e2], with both
    // tails taken from the outage
    let sys = outage_scenario(1.2, 0.15, 10.0)?;
    let (ys, ws) = GaussLegendre::order16().composite((1e-4f64).ln(), (1e2f64).ln(), 12);
    let mut body = 0.0;
    for (y, w) in ys.iter().zip(&ws) {
        let g = y.exp();
        body += w * g * pdf_end_to_end(&sys, g, &opts())?.value;
    }
    let below = outage_probability(&sys, 1e-4, &opts())?.value;
    let above = 1.0 - outage_probability(&sys, 1e2, &opts())?.value;
    fox = fox.max((body + below + above - 1.0).abs());
    ok &= fox <= 1e-3;
    notes.push(format!("normalisation elementary {elem:.1e} (1e-6), Fox-H {fox:.1e} (1e-3)"));

    // samplers
    let mut ks = Vec::new();
    ok &= ks_of("alpha-mu", |r| sample_alpha_mu(&thz, r), |x| cdf_alpha_mu(&thz, x), 1, &mut ks)?;
    ok &= ks_of("alpha-KMS", |r| sample_alpha_kms(&rf, r), |x| cdf_snr_rf(&rf, x * x), 4, &mut ks)?;
    ok &= ks_of("pointing s=0", |r| sample_pointing(&pt0, r), |h| cdf_pointing(&pt0, h), 1, &mut ks)?;
    ok &= ks_of("pointing s>0", |r| sample_pointing(&pt, r), |h| cdf_pointing(&pt, h), 2, &mut ks)?;
    let rf10 = rf.with_gamma_bar(10.0)?;
    ok &= ks_of("rf SNR", |r| sample_snr_rf(&rf10, r), |g| cdf_snr_rf(&rf10, g), 4, &mut ks)?;
    ok &= ks_of(
        "thz SNR",
        |r| sample_snr_thz(&thz, &pt, r),
        |g| cdf_snr_thz(&thz, &pt, g).map(|s| s.value).unwrap_or(f64::NAN),
        300,
        &mut ks,
    )?;
    let oracle = ConditioningOracle::new(&sys)?;
    let mut rng = batch_rng(SEED, 0);
    let mut xs: Vec<f64> = (0..1_000_000).map(|_| sample_end_to_end(&sys, &mut rng)).collect();
    let r = ks_statistic(&mut xs, |z| oracle.cdf(z), 250)?;
    ok &= r.passed();
    ks.push(format!("end-to-end D={:.2e}", r.statistic));
    notes.push(format!("KS at N=1e6 (critical {:.2e}): {}", 1.63e-3, ks.join(", ")));

    // boresight continuity
    let near = PointingParams::from_aperture(0.1, 0.6087, 1e-9, 0.15)?;
    let mut cont: f64 = 0.0;
    for g in [0.01, 0.1, 1.0] {
        let gk = g * k;
        cont = cont.max((pdf_snr_thz(&thz, &pt0, gk)?.value - pdf_snr_thz(&thz, &near, gk)?.value).abs() * gk);
        cont = cont.max((cdf_snr_thz(&thz, &pt0, gk)?.value - cdf_snr_thz(&thz, &near, gk)?.value).abs());
    }
    for h in [0.2, 0.5, 0.9] {
        let hp = h * pt0.s0;
        cont = cont.max((pdf_pointing(&pt0, hp)? - pdf_pointing(&near, hp)?).abs() * hp);
    }
    ok &= cont <= 1e-6;
    notes.push(format!("s -> 0 continuity {cont:.1e} (1e-6)"));
    Ok(verdict(ok, notes.join("; ")))
}

fn c9_af_vs_df() -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    let cfg = sim(1_000_000);
    for (mu_t, sigma) in OUTAGE_CURVES {
        let pick = |df: bool| {
            move |db: f64| -> Result<f64> {
                let (af, dfv) = estimate_outage_af_df(&outage_scenario(mu_t, sigma, db)?, gamma_th(), &cfg)?;
                Ok(if df { dfv.value } else { af.value })
            }
        };
        let af = required_snr_db(pick(false), 1e-2, -10.0, 100.0, 0.02)?;
        let df = required_snr_db(pick(true), 1e-2, -10.0, 100.0, 0.02)?;
        let gap = af - df;
        ok &= gap.abs() < 3.0;
        parts.push(format!("mu_t={mu_t} sigma={sigma}: AF-DF {gap:+.2} dB"));
    }
    Ok(verdict(ok, format!("{} (limit 3 dB)", parts.join("; "))))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Verdict>); 9] = [
        ("1 analytic vs Monte-Carlo outage", c1_analytic_vs_simulation),
        ("2 jitter penalty", c2_jitter_penalty),
        ("3 BER non-linearity", c3_ber_nonlinearity),
        ("4 capacity anchor", c4_capacity_anchor),
        ("5 diversity order", c5_diversity_order),
        ("6 asymptote ratio", c6_asymptote),
        ("7 special functions", c7_special_functions),
        ("8 distributions", c8_distributions),
        ("9 AF vs DF", c9_af_vs_df),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} criterion {name}: {detail} [{:.1} s]", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
