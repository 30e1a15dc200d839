//! `rfthz`: sweeps, single-point evaluations and the self-validation suite for
//! the mixed RF/THz fixed-gain relay link.

mod config;
mod run;
mod validate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::{parse_methods, Config, ConfigError, MetricKind};
use rfthz_core::linkbudget::semi_blind_c;
use rfthz_core::montecarlo::{default_workers, estimate_semi_blind_c, SimConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "rfthz", version, about = "Fixed-gain AF relay over an RF hop and a THz hop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file (`section.key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo master seed, overriding `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo sample count, overriding `sim.n_samples`.
    #[arg(long)]
    samples: Option<u64>,
    /// Comma-separated methods, overriding `sweep.methods`.
    #[arg(long)]
    methods: Option<String>,
    /// Leave the wallclock column empty so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate every grid point of the configured sweep.
    Sweep(Common),
    /// Evaluate the configured operating point once.
    Point {
        #[command(flatten)]
        common: Common,
        /// Comma-separated metrics, overriding `sweep.metrics`.
        #[arg(long)]
        metrics: Option<String>,
    },
    /// Print the semi-blind relay constant C.
    CConst(Common),
    /// Run the invariant suites.
    Validate {
        /// Reduced sample counts, no KS or chi-square suites.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Test hook: corrupt part of the suite on purpose.
        #[arg(long, hide = true, value_parser = ["abscissa"])]
        inject_fault: Option<String>,
    },
}

enum Failure {
    Config(ConfigError),
    Numerical(String),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Other(e)
    }
}

fn load(common: &Common) -> Result<(Config, SimConfig), Failure> {
    let path = common.config.as_ref().ok_or_else(|| ConfigError::new("--config is required"))?;
    let mut cfg = Config::load(path)?;
    if let Some(m) = &common.methods {
        parse_methods(m)?;
        cfg.set_text("sweep.methods", m);
    }
    if let Some(s) = common.seed {
        cfg.set_text("sim.seed", &s.to_string());
    }
    if let Some(n) = common.samples {
        cfg.set_text("sim.n_samples", &n.to_string());
    }
    let sim = cfg.sim()?;
    Ok((cfg, sim))
}

fn output(common: &Common) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(common: &Common, cfg: &Config, sim: &SimConfig, rows: &[run::Row]) -> Result<(), Failure> {
    run::write_csv(output(common)?, rows, !common.no_timing).context("writing CSV")?;
    if let Some(p) = &common.out {
        let side = run::provenance_path(p);
        let f = File::create(&side).with_context(|| format!("creating {}", side.display()))?;
        run::write_provenance(BufWriter::new(f), cfg, sim).context("writing provenance")?;
    }
    if let Some(r) = rows.iter().find(|r| r.numerical_failure) {
        return Err(Failure::Numerical(format!(
            "{} {} at {} = {}: {}",
            r.metric.name(),
            r.method.name(),
            r.swept_var,
            r.value,
            r.error.as_deref().unwrap_or("")
        )));
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep(common) => {
            let (cfg, sim) = load(&common)?;
            let spec = cfg.sweep()?;
            let rows = run::run_sweep(&cfg, &spec, &sim);
            emit(&common, &cfg, &sim, &rows)
        }
        Command::Point { common, metrics } => {
            let (mut cfg, sim) = load(&common)?;
            if let Some(m) = metrics {
                cfg.set_text("sweep.metrics", &m);
            }
            let spec = cfg.sweep()?;
            let metrics: Vec<MetricKind> = spec.metrics.clone();
            let rows = run::run_point(&cfg, &metrics, &spec.methods, &sim);
            emit(&common, &cfg, &sim, &rows)
        }
        Command::CConst(common) => {
            let (cfg, sim) = load(&common)?;
            let rf = cfg.system()?.rf;
            let c = semi_blind_c(&rf).map_err(|e| Failure::Numerical(e.to_string()))?;
            let mut out = output(&common)?;
            writeln!(out, "gamma_bar_r = {}", rf.gamma_bar()).context("writing")?;
            writeln!(out, "C = {}", c.c).context("writing")?;
            if common.samples.is_some() {
                let m = estimate_semi_blind_c(&rf, &sim).map_err(|e| Failure::Numerical(e.to_string()))?;
                writeln!(out, "C_monte_carlo = {} +/- {}", m.value, m.std_error.unwrap_or(0.0)).context("writing")?;
            }
            Ok(())
        }
        Command::Validate { quick, seed, inject_fault } => {
            let level = if quick { validate::Level::Quick } else { validate::Level::Full };
            let faults = validate::Faults { abscissa: inject_fault.as_deref() == Some("abscissa") };
            let checks = validate::run(level, faults, seed, default_workers());
            let mut failed = 0;
            for c in &checks {
                println!("{}", c.line());
                failed += usize::from(!c.pass);
            }
            println!("{} checks, {} failed", checks.len(), failed);
            if failed > 0 {
                return Err(Failure::Other(anyhow::anyhow!("{failed} validation check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
