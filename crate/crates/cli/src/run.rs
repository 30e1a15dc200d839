//! Metric evaluation over a sweep, CSV output and the provenance sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use rfthz_core::analytic::{
    asymptotic_psi, average_ber, ergodic_capacity, outage_probability, AnalyticOptions, Metric,
};
use rfthz_core::montecarlo::{estimate_ber, estimate_capacity, estimate_outage, estimate_outage_df_baseline, SimConfig};
use rfthz_core::Error;

use crate::config::{Config, ConfigError, MethodKind, MetricKind, SweepSpec};

pub const HEADER: [&str; 9] =
    ["swept_var", "value", "metric", "method", "result", "std_error", "series_terms_used", "wallclock_ms", "error"];

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub swept_var: String,
    pub value: f64,
    pub metric: MetricKind,
    pub method: MethodKind,
    pub result: Option<f64>,
    pub std_error: Option<f64>,
    pub series_terms: Option<usize>,
    pub wallclock_ms: f64,
    pub error: Option<String>,
    /// The failure was numerical rather than an unsupported combination.
    pub numerical_failure: bool,
}

struct Outcome {
    value: f64,
    std_error: Option<f64>,
    terms: Option<usize>,
}

fn evaluate(cfg: &Config, sim: &SimConfig, metric: MetricKind, method: MethodKind) -> Result<Outcome, EvalError> {
    let sys = cfg.system()?;
    let opts = AnalyticOptions::default();
    let th = cfg.gamma_th()?;
    let m = cfg.modulation()?;
    let exact = |value: f64, terms: usize| Outcome { value, std_error: None, terms: Some(terms) };
    let mc = |r: rfthz_core::montecarlo::MetricResult| Outcome { value: r.value, std_error: r.std_error, terms: None };
    Ok(match (metric, method) {
        (MetricKind::Outage, MethodKind::Analytic) => {
            let v = outage_probability(&sys, th, &opts)?;
            exact(v.value, v.series_terms)
        }
        (MetricKind::Ber, MethodKind::Analytic) => {
            let v = average_ber(&sys, m, &opts)?;
            exact(v.value, v.series_terms)
        }
        (MetricKind::Capacity, MethodKind::Analytic) => {
            let v = ergodic_capacity(&sys, &opts)?;
            exact(v.value, v.series_terms)
        }
        (MetricKind::Outage, MethodKind::Asymptotic) => Outcome {
            value: asymptotic_psi(&sys, Metric::Outage { gamma_th: th }, &opts.quad)?,
            std_error: None,
            terms: None,
        },
        (MetricKind::Ber, MethodKind::Asymptotic) => {
            Outcome { value: asymptotic_psi(&sys, Metric::Ber(m), &opts.quad)?, std_error: None, terms: None }
        }
        (MetricKind::Outage, MethodKind::MonteCarlo) => mc(estimate_outage(&sys, th, sim)?),
        (MetricKind::Ber, MethodKind::MonteCarlo) => mc(estimate_ber(&sys, m, sim)?),
        (MetricKind::Capacity, MethodKind::MonteCarlo) => mc(estimate_capacity(&sys, sim)?),
        (MetricKind::Outage, MethodKind::DfBaseline) => mc(estimate_outage_df_baseline(&sys, th, sim)?),
        (metric, method) => {
            return Err(EvalError::Unsupported(format!("{} is not available for {}", method.name(), metric.name())))
        }
    })
}

enum EvalError {
    Unsupported(String),
    Config(ConfigError),
    Numerical(Error),
}

impl From<ConfigError> for EvalError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for EvalError {
    fn from(e: Error) -> Self {
        Self::Numerical(e)
    }
}

fn is_numerical(e: &Error) -> bool {
    !matches!(e, Error::InvalidParameter(_) | Error::Domain(_))
}

/// Evaluate every grid point, metric and method. Grid points run in parallel;
/// rows come back in grid order.
pub fn run_sweep(cfg: &Config, spec: &SweepSpec, sim: &SimConfig) -> Vec<Row> {
    let jobs: Vec<(f64, MetricKind, MethodKind)> = spec
        .grid
        .iter()
        .flat_map(|&g| spec.metrics.iter().flat_map(move |&m| spec.methods.iter().map(move |&k| (g, m, k))))
        .collect();
    jobs.par_iter()
        .map(|&(g, metric, method)| {
            let point = cfg.with(spec.key, g);
            point_row(&point, sim, &spec.var, g, metric, method)
        })
        .collect()
}

/// Rows at the configuration's own operating point.
pub fn run_point(cfg: &Config, metrics: &[MetricKind], methods: &[MethodKind], sim: &SimConfig) -> Vec<Row> {
    let mut rows = Vec::new();
    for &metric in metrics {
        for &method in methods {
            rows.push(point_row(cfg, sim, "", f64::NAN, metric, method));
        }
    }
    rows
}

fn point_row(cfg: &Config, sim: &SimConfig, var: &str, value: f64, metric: MetricKind, method: MethodKind) -> Row {
    let t = Instant::now();
    let out = evaluate(cfg, sim, metric, method);
    let wallclock_ms = t.elapsed().as_secs_f64() * 1e3;
    let mut row = Row {
        swept_var: var.to_string(),
        value,
        metric,
        method,
        result: None,
        std_error: None,
        series_terms: None,
        wallclock_ms,
        error: None,
        numerical_failure: false,
    };
    match out {
        Ok(o) => {
            row.result = Some(o.value);
            row.std_error = o.std_error;
            row.series_terms = o.terms;
        }
        Err(EvalError::Unsupported(m)) => row.error = Some(m),
        Err(EvalError::Config(e)) => row.error = Some(e.to_string()),
        Err(EvalError::Numerical(e)) => {
            row.numerical_failure = is_numerical(&e);
            row.error = Some(e.to_string());
        }
    }
    row
}

fn opt_num<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Write rows as CSV. Floats use Rust's shortest round-trip formatting.
pub fn write_csv<W: Write>(out: W, rows: &[Row], timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.swept_var.clone(),
            if r.value.is_nan() { String::new() } else { r.value.to_string() },
            r.metric.name().to_string(),
            r.method.name().to_string(),
            opt_num(r.result),
            opt_num(r.std_error),
            opt_num(r.series_terms),
            if timing { format!("{:.3}", r.wallclock_ms) } else { String::new() },
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar path next to the CSV output.
pub fn provenance_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".provenance");
    PathBuf::from(p)
}

/// Every resolved key, defaults flagged, plus the derived model quantities.
pub fn write_provenance<W: Write>(mut out: W, cfg: &Config, sim: &SimConfig) -> std::io::Result<()> {
    writeln!(out, "# rfthz {}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in cfg.entries() {
        if cfg.defaulted().contains(k) {
            writeln!(out, "{k} = {v}  # default")?;
        } else {
            writeln!(out, "{k} = {v}")?;
        }
    }
    writeln!(out, "# resolved")?;
    writeln!(out, "sim.workers.resolved = {}", sim.workers)?;
    writeln!(out, "sim.n_samples.resolved = {}", sim.n_samples)?;
    writeln!(out, "sim.seed.resolved = {}", sim.seed)?;
    if let Ok(sys) = cfg.system() {
        let snap = rfthz_core::montecarlo::snapshot(&sys);
        for (k, v) in snap.iter() {
            writeln!(out, "model.{k} = {v}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::parse(
            "rf.alpha_r = 1.8\nrf.kappa_r = 4\nrf.mu_r = 2\nrf.m_r = 2\nthz.alpha_t = 1.5\nthz.mu_t = 1.2\n\
             pointing.sigma_jitter = 0.15\npointing.boresight = 0.1414\nsweep.grid = 10, 20\nsim.n_samples = 20000\n",
        )
        .unwrap()
    }

    #[test]
    fn cardinality_and_order() {
        let c = cfg();
        let spec = c.sweep().unwrap();
        let rows = run_sweep(&c, &spec, &c.sim().unwrap());
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![10.0, 10.0, 20.0, 20.0]);
        assert_eq!(rows[0].method, MethodKind::Analytic);
        assert!(rows[0].series_terms.is_some() && rows[0].std_error.is_none());
        assert!(rows[1].std_error.is_some());
    }

    #[test]
    fn unsupported_combinations_fill_the_error_column() {
        let c = cfg();
        let rows = run_point(&c, &[MetricKind::Capacity], &[MethodKind::Asymptotic, MethodKind::DfBaseline], &c.sim().unwrap());
        assert!(rows.iter().all(|r| r.result.is_none() && r.error.is_some() && !r.numerical_failure));
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("swept_var,value,metric,method,result,std_error,series_terms_used,wallclock_ms,error\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn provenance_flags_defaults() {
        let c = cfg();
        let mut buf = Vec::new();
        write_provenance(&mut buf, &c, &c.sim().unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("pointing.series_terms = 10  # default"));
        assert!(text.contains("thz.mu_t = 1.2\n"));
        assert!(text.contains("model.relay_c = "));
    }
}
