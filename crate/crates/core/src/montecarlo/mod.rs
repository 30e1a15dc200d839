//! Monte-Carlo ground truth for the relay link.
//!
//! Samples are drawn in fixed-size batches. Batch `b` uses a ChaCha8 generator
//! seeded with the master seed on stream `b`, so the draws do not depend on how
//! batches are spread over threads. Per-batch accumulators are merged in batch
//! order, which makes every estimate bit-identical for a given seed and sample
//! count whatever the worker count.

pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{ModulationParams, SystemModel};
use crate::channels::rf::sample_snr_rf;
use crate::channels::thz::sample_snr_thz;
use crate::channels::RfFadingParams;
use crate::error::{Error, Result};
use crate::linkbudget::GainMode;
use crate::specfun::gamma::gamma_q;

/// Sampling controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub batch_size: u64,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_samples: 1_000_000, seed: 0x5eed, batch_size: 1 << 16, workers: default_workers() }
    }
}

/// Worker count from `THZ_RELAY_THREADS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var("THZ_RELAY_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

impl SimConfig {
    pub fn new(n_samples: u64, seed: u64) -> Result<Self> {
        let c = Self { n_samples, seed, ..Self::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples >= 1 violated".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size >= 1 violated".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers >= 1 violated".into()));
        }
        Ok(())
    }

    fn batches(&self) -> u64 {
        self.n_samples.div_ceil(self.batch_size)
    }

    fn batch_len(&self, b: u64) -> u64 {
        self.batch_size.min(self.n_samples - b * self.batch_size)
    }
}

/// How a metric value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Analytic,
    Asymptotic,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

/// Echo of every model input, shared and read-only.
pub type ParamsSnapshot = Arc<BTreeMap<String, String>>;

/// Snapshot of a system model's inputs.
pub fn snapshot(sys: &SystemModel) -> ParamsSnapshot {
    let (rf, thz, pt) = (&sys.rf, &sys.thz, &sys.pt);
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        m.insert(k.to_string(), format!("{v:e}"));
    };
    put("alpha_r", rf.alpha());
    put("kappa_r", rf.kappa());
    put("mu_r", rf.mu());
    put("m_r", rf.m());
    put("gamma_bar_r", rf.gamma_bar());
    put("alpha_t", thz.alpha());
    put("mu_t", thz.mu());
    put("omega_t", thz.omega());
    put("gamma_bar_t", thz.gamma_bar());
    put("boresight", pt.s);
    put("sigma_jitter", pt.sigma);
    put("w_zeq", pt.w_zeq);
    put("s0", pt.s0);
    put("phi", pt.phi());
    put("series_terms", pt.series_terms as f64);
    put("relay_c", sys.relay.c);
    m.insert(
        "gain_mode".into(),
        match sys.relay.gain_mode {
            GainMode::SemiBlind => "semi-blind".into(),
            GainMode::Explicit => "explicit".into(),
        },
    );
    Arc::new(m)
}

/// A metric value with its provenance. Monte-Carlo results always carry a standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub value: f64,
    pub std_error: Option<f64>,
    pub method: Method,
    pub params: ParamsSnapshot,
}

impl MetricResult {
    pub fn analytic(value: f64, params: ParamsSnapshot) -> Self {
        Self { value, std_error: None, method: Method::Analytic, params }
    }

    pub fn asymptotic(value: f64, params: ParamsSnapshot) -> Self {
        Self { value, std_error: None, method: Method::Asymptotic, params }
    }

    fn monte_carlo(value: f64, std_error: f64, params: ParamsSnapshot) -> Self {
        Self { value, std_error: Some(std_error), method: Method::MonteCarlo, params }
    }
}

/// Mean and variance accumulator (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Draw `(γ_r, γ_t)` for one channel use, RF hop first.
pub fn sample_hops<R: Rng + ?Sized>(sys: &SystemModel, rng: &mut R) -> (f64, f64) {
    let gr = sample_snr_rf(&sys.rf, rng);
    let gt = sample_snr_thz(&sys.thz, &sys.pt, rng);
    (gr, gt)
}

/// Fixed-gain combination `γ_r γ_t / (γ_t + C)`.
pub fn combine(gr: f64, gt: f64, c: f64) -> f64 {
    if gt == 0.0 {
        0.0
    } else {
        gr * gt / (gt + c)
    }
}

/// One end-to-end SNR draw.
pub fn sample_end_to_end<R: Rng + ?Sized>(sys: &SystemModel, rng: &mut R) -> f64 {
    let (gr, gt) = sample_hops(sys, rng);
    combine(gr, gt, sys.relay.c)
}

/// Generator for batch `b`.
pub fn batch_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

/// Run `step` on every sample of every batch, with `K` accumulators per batch,
/// and merge the batches in order.
fn run<const K: usize, F>(cfg: &SimConfig, step: F) -> Result<[Moments; K]>
where
    F: Fn(&mut ChaCha8Rng, &mut [Moments; K]) + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let parts: Vec<[Moments; K]> = pool.install(|| {
        (0..cfg.batches())
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(cfg.seed, b);
                let mut acc = [Moments::default(); K];
                for _ in 0..cfg.batch_len(b) {
                    step(&mut rng, &mut acc);
                }
                acc
            })
            .collect()
    });
    let mut total = [Moments::default(); K];
    for p in &parts {
        for (t, x) in total.iter_mut().zip(p) {
            t.merge(x);
        }
    }
    Ok(total)
}

fn indicator(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

/// Binomial standard error `√(p̂(1−p̂)/N)`.
fn binomial(m: &Moments) -> (f64, f64) {
    let p = m.mean;
    (p, (p * (1.0 - p) / m.n as f64).max(0.0).sqrt())
}

/// `P(γ < γ_th)` by indicator means.
pub fn estimate_outage(sys: &SystemModel, gamma_th: f64, cfg: &SimConfig) -> Result<MetricResult> {
    if !(gamma_th >= 0.0) {
        return Err(Error::Domain(format!("threshold must be non-negative, got {gamma_th}")));
    }
    let c = sys.relay.c;
    let [m] = run::<1, _>(cfg, |rng, acc| {
        let (gr, gt) = sample_hops(sys, rng);
        acc[0].push(indicator(combine(gr, gt, c) < gamma_th));
    })?;
    let (p, se) = binomial(&m);
    Ok(MetricResult::monte_carlo(p, se, snapshot(sys)))
}

/// Outage of the decode-and-forward abstraction `min(γ_r, γ_t)`.
///
/// The draws are those of [`estimate_outage`] for the same configuration, so the
/// two estimates share their random numbers.
pub fn estimate_outage_df_baseline(sys: &SystemModel, gamma_th: f64, cfg: &SimConfig) -> Result<MetricResult> {
    Ok(estimate_outage_af_df(sys, gamma_th, cfg)?.1)
}

/// AF and DF outage from the same draws.
pub fn estimate_outage_af_df(sys: &SystemModel, gamma_th: f64, cfg: &SimConfig) -> Result<(MetricResult, MetricResult)> {
    if !(gamma_th >= 0.0) {
        return Err(Error::Domain(format!("threshold must be non-negative, got {gamma_th}")));
    }
    let c = sys.relay.c;
    let [af, df] = run::<2, _>(cfg, |rng, acc| {
        let (gr, gt) = sample_hops(sys, rng);
        acc[0].push(indicator(combine(gr, gt, c) < gamma_th));
        acc[1].push(indicator(gr.min(gt) < gamma_th));
    })?;
    let params = snapshot(sys);
    let (pa, sa) = binomial(&af);
    let (pd, sd) = binomial(&df);
    Ok((MetricResult::monte_carlo(pa, sa, params.clone()), MetricResult::monte_carlo(pd, sd, params)))
}

/// Mean of the conditional error `Γ(p, qγ) / (2Γ(p))`.
pub fn estimate_ber(sys: &SystemModel, m: ModulationParams, cfg: &SimConfig) -> Result<MetricResult> {
    ModulationParams::new(m.p, m.q)?;
    let c = sys.relay.c;
    let [acc] = run::<1, _>(cfg, |rng, acc| {
        let (gr, gt) = sample_hops(sys, rng);
        acc[0].push(0.5 * gamma_q(m.p, m.q * combine(gr, gt, c)));
    })?;
    Ok(MetricResult::monte_carlo(acc.mean, acc.std_error(), snapshot(sys)))
}

/// Mean of `log₂(1 + γ)`.
pub fn estimate_capacity(sys: &SystemModel, cfg: &SimConfig) -> Result<MetricResult> {
    let c = sys.relay.c;
    let [acc] = run::<1, _>(cfg, |rng, acc| {
        let (gr, gt) = sample_hops(sys, rng);
        acc[0].push(combine(gr, gt, c).ln_1p() / std::f64::consts::LN_2);
    })?;
    Ok(MetricResult::monte_carlo(acc.mean, acc.std_error(), snapshot(sys)))
}

/// `C = 1 / E[1/(1+γ_r)]` with a delta-method standard error.
pub fn estimate_semi_blind_c(rf: &RfFadingParams, cfg: &SimConfig) -> Result<MetricResult> {
    let [acc] = run::<1, _>(cfg, |rng, acc| {
        acc[0].push(1.0 / (1.0 + sample_snr_rf(rf, rng)));
    })?;
    let u = acc.mean;
    let mut m = BTreeMap::new();
    for (k, v) in [
        ("alpha_r", rf.alpha()),
        ("kappa_r", rf.kappa()),
        ("mu_r", rf.mu()),
        ("m_r", rf.m()),
        ("gamma_bar_r", rf.gamma_bar()),
    ] {
        m.insert(k.to_string(), format!("{v:e}"));
    }
    Ok(MetricResult::monte_carlo(1.0 / u, acc.std_error() / (u * u), Arc::new(m)))
}
