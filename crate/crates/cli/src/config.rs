//! Flat `section.key = value` configuration.
//!
//! Blank lines and `#` comments are ignored. Every key must be known; a key
//! that is absent takes its default, and defaulted keys are remembered so the
//! provenance file can flag them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rfthz_core::analytic::{ModulationParams, SystemModel};
use rfthz_core::channels::{PointingParams, RfFadingParams, ThzFadingParams};
use rfthz_core::linkbudget::{average_snrs, db_to_linear, semi_blind_c, LinkGeometry, RelayParams};
use rfthz_core::montecarlo::{default_workers, SimConfig};

/// A problem with the configuration itself, as opposed to a numerical failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    pub fn new(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self { line: Some(l), message } => write!(f, "line {l}: {message}"),
            Self { line: None, message } => f.write_str(message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<rfthz_core::Error> for ConfigError {
    fn from(e: rfthz_core::Error) -> Self {
        match e {
            rfthz_core::Error::InvalidParameter(m) => Self::new(m),
            other => Self::new(other.to_string()),
        }
    }
}

/// Known keys with their defaults. `None` marks a required key.
const KEYS: &[(&str, Option<&str>)] = &[
    ("rf.alpha_r", None),
    ("rf.kappa_r", None),
    ("rf.mu_r", None),
    ("rf.m_r", None),
    ("thz.alpha_t", None),
    ("thz.mu_t", None),
    ("thz.omega_t", Some("1")),
    ("pointing.sigma_jitter", None),
    ("pointing.boresight", Some("0")),
    ("pointing.w_zeq", Some("0.6087")),
    ("pointing.aperture", Some("0.1")),
    ("pointing.s0", Some("auto")),
    ("pointing.series_terms", Some("10")),
    ("snr.source", Some("direct")),
    ("snr.gamma_bar_r_db", Some("20")),
    ("snr.gamma_bar_t_db", Some("tied")),
    ("link.d_r", Some("100")),
    ("link.f_r", Some("6e9")),
    ("link.g_r_dbi", Some("26")),
    ("link.d_t", Some("50")),
    ("link.f_t", Some("0.275e12")),
    ("link.g_t_dbi", Some("55")),
    ("link.k_abs", Some("2.8e-4")),
    ("link.transmit_power_dbm", Some("20")),
    ("link.noise_density_dbm_hz", Some("-170")),
    ("link.b_r", Some("20e6")),
    ("link.b_t", Some("10e9")),
    ("relay.gain_mode", Some("semi-blind")),
    ("relay.c", Some("1")),
    ("metric.gamma_th_db", Some("4")),
    ("modulation.p", Some("0.5")),
    ("modulation.q", Some("1")),
    ("sweep.var", Some("gamma_bar_r_db")),
    ("sweep.grid", Some("0,10,20,30,40")),
    ("sweep.metrics", Some("outage")),
    ("sweep.methods", Some("analytic,monte-carlo")),
    ("sim.n_samples", Some("1000000")),
    ("sim.seed", Some("1")),
    ("sim.batch_size", Some("65536")),
    ("sim.workers", Some("auto")),
];

/// Swept variables and the one key each one drives.
pub const SWEEP_VARS: &[(&str, &str)] = &[
    ("gamma_bar_r_db", "snr.gamma_bar_r_db"),
    ("gamma_bar_t_db", "snr.gamma_bar_t_db"),
    ("transmit_power_dbm", "link.transmit_power_dbm"),
    ("d_r", "link.d_r"),
    ("d_t", "link.d_t"),
    ("sigma_jitter", "pointing.sigma_jitter"),
    ("boresight", "pointing.boresight"),
    ("alpha_t", "thz.alpha_t"),
    ("mu_t", "thz.mu_t"),
    ("alpha_r", "rf.alpha_r"),
    ("kappa_r", "rf.kappa_r"),
    ("mu_r", "rf.mu_r"),
    ("m_r", "rf.m_r"),
    ("gamma_th_db", "metric.gamma_th_db"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    Outage,
    Ber,
    Capacity,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Outage => "outage",
            Self::Ber => "ber",
            Self::Capacity => "capacity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "outage" => Some(Self::Outage),
            "ber" => Some(Self::Ber),
            "capacity" => Some(Self::Capacity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MethodKind {
    Analytic,
    Asymptotic,
    MonteCarlo,
    DfBaseline,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::Asymptotic => "asymptotic",
            Self::MonteCarlo => "monte-carlo",
            Self::DfBaseline => "df-baseline",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(Self::Analytic),
            "asymptotic" => Some(Self::Asymptotic),
            "monte-carlo" | "mc" => Some(Self::MonteCarlo),
            "df-baseline" | "df" => Some(Self::DfBaseline),
            _ => None,
        }
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<MethodKind>, ConfigError> {
    parse_list(list, "method", MethodKind::parse)
}

fn parse_list<T: Ord + Copy>(list: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v = f(item).ok_or_else(|| ConfigError::new(format!("unknown {what} '{item}'")))?;
        if out.contains(&v) {
            return Err(ConfigError::new(format!("{what} '{item}' listed twice")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(ConfigError::new(format!("at least one {what} required")));
    }
    Ok(out)
}

/// What to sweep and how to evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub var: String,
    pub key: &'static str,
    pub grid: Vec<f64>,
    pub metrics: Vec<MetricKind>,
    pub methods: Vec<MethodKind>,
}

/// Resolved key/value table with the line each explicit value came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    lines: BTreeMap<String, usize>,
    defaulted: Vec<String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut lines = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::at(n, "expected 'key = value'"))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(ConfigError::at(n, format!("unknown key '{k}'")));
            }
            if v.is_empty() {
                return Err(ConfigError::at(n, format!("empty value for '{k}'")));
            }
            if let Some(first) = lines.insert(k.to_string(), n) {
                return Err(ConfigError::at(n, format!("'{k}' already set on line {first}")));
            }
            values.insert(k.to_string(), v.to_string());
        }
        let mut defaulted = Vec::new();
        for (k, d) in KEYS {
            if values.contains_key(*k) {
                continue;
            }
            match d {
                Some(d) => {
                    values.insert(k.to_string(), d.to_string());
                    defaulted.push(k.to_string());
                }
                None => return Err(ConfigError::new(format!("missing required key '{k}'"))),
            }
        }
        let cfg = Self { values, lines, defaulted };
        cfg.system()?;
        cfg.sweep()?;
        cfg.sim()?;
        cfg.modulation()?;
        cfg.gamma_th()?;
        Ok(cfg)
    }

    fn err(&self, key: &str, msg: String) -> ConfigError {
        ConfigError { line: self.lines.get(key).copied(), message: msg }
    }

    pub fn text(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn num(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.text(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err(key, format!("'{key}' must be a finite number, got '{v}'")))
    }

    fn uint(&self, key: &str) -> Result<u64, ConfigError> {
        let v = self.text(key);
        // accept 1e6-style counts
        let x = v.parse::<u64>().ok().or_else(|| {
            v.parse::<f64>().ok().filter(|x| x.fract() == 0.0 && *x >= 0.0 && *x < 1.8e19).map(|x| x as u64)
        });
        x.ok_or_else(|| self.err(key, format!("'{key}' must be a non-negative integer, got '{v}'")))
    }

    /// Copy with one key replaced, as a sweep does.
    pub fn with(&self, key: &str, value: f64) -> Self {
        let mut c = self.clone();
        c.values.insert(key.to_string(), format!("{value}"));
        c.defaulted.retain(|k| k != key);
        c
    }

    pub fn set_text(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
        self.defaulted.retain(|k| k != key);
    }

    pub fn defaulted(&self) -> &[String] {
        &self.defaulted
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    pub fn geometry(&self) -> Result<LinkGeometry, ConfigError> {
        let p = self.num("link.transmit_power_dbm")?;
        let g = LinkGeometry {
            d_r: self.num("link.d_r")?,
            f_r: self.num("link.f_r")?,
            g_r_dbi: self.num("link.g_r_dbi")?,
            d_t: self.num("link.d_t")?,
            f_t: self.num("link.f_t")?,
            g_t_dbi: self.num("link.g_t_dbi")?,
            k_abs: self.num("link.k_abs")?,
            p_r_dbm: p,
            p_t_dbm: p,
            noise_density_dbm_hz: self.num("link.noise_density_dbm_hz")?,
            b_r: self.num("link.b_r")?,
            b_t: self.num("link.b_t")?,
        };
        g.validate()?;
        Ok(g)
    }

    /// Linear average SNRs of both hops.
    pub fn gamma_bars(&self) -> Result<(f64, f64), ConfigError> {
        match self.text("snr.source") {
            "direct" => {
                let r = self.num("snr.gamma_bar_r_db")?;
                let t = match self.text("snr.gamma_bar_t_db") {
                    "tied" => r,
                    _ => self.num("snr.gamma_bar_t_db")?,
                };
                Ok((db_to_linear(r), db_to_linear(t)))
            }
            "link-budget" => Ok(average_snrs(&self.geometry()?)?),
            other => Err(self.err("snr.source", format!("snr.source must be 'direct' or 'link-budget', got '{other}'"))),
        }
    }

    pub fn pointing(&self) -> Result<PointingParams, ConfigError> {
        let s = self.num("pointing.boresight")?;
        let sigma = self.num("pointing.sigma_jitter")?;
        let w = self.num("pointing.w_zeq")?;
        let terms = self.uint("pointing.series_terms")? as usize;
        let p = match self.text("pointing.s0") {
            "auto" => PointingParams::from_aperture(self.num("pointing.aperture")?, w, s, sigma)?,
            _ => PointingParams::new(s, sigma, w, self.num("pointing.s0")?)?,
        };
        Ok(p.with_series_terms(terms)?)
    }

    pub fn system(&self) -> Result<SystemModel, ConfigError> {
        let (gr, gt) = self.gamma_bars()?;
        let rf = RfFadingParams::new(
            self.num("rf.alpha_r")?,
            self.num("rf.kappa_r")?,
            self.num("rf.mu_r")?,
            self.num("rf.m_r")?,
            gr,
        )?;
        let thz = ThzFadingParams::new(self.num("thz.alpha_t")?, self.num("thz.mu_t")?, self.num("thz.omega_t")?, gt)?;
        let pt = self.pointing()?;
        let relay = match self.text("relay.gain_mode") {
            "semi-blind" => semi_blind_c(&rf)?,
            "explicit" => RelayParams::explicit(self.num("relay.c")?)?,
            other => {
                return Err(self.err(
                    "relay.gain_mode",
                    format!("relay.gain_mode must be 'semi-blind' or 'explicit', got '{other}'"),
                ))
            }
        };
        Ok(SystemModel::new(rf, thz, pt, relay)?)
    }

    pub fn gamma_th(&self) -> Result<f64, ConfigError> {
        Ok(db_to_linear(self.num("metric.gamma_th_db")?))
    }

    pub fn modulation(&self) -> Result<ModulationParams, ConfigError> {
        Ok(ModulationParams::new(self.num("modulation.p")?, self.num("modulation.q")?)?)
    }

    pub fn sim(&self) -> Result<SimConfig, ConfigError> {
        let workers = match self.text("sim.workers") {
            "auto" => default_workers(),
            _ => self.uint("sim.workers")? as usize,
        };
        let c = SimConfig {
            n_samples: self.uint("sim.n_samples")?,
            seed: self.uint("sim.seed")?,
            batch_size: self.uint("sim.batch_size")?,
            workers,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn sweep(&self) -> Result<SweepSpec, ConfigError> {
        let var = self.text("sweep.var").to_string();
        let key = SWEEP_VARS
            .iter()
            .find(|(v, _)| *v == var)
            .map(|(_, k)| *k)
            .ok_or_else(|| self.err("sweep.var", format!("unknown sweep variable '{var}'")))?;
        let grid = parse_grid(self.text("sweep.grid")).map_err(|m| self.err("sweep.grid", m))?;
        let metrics = parse_list(self.text("sweep.metrics"), "metric", MetricKind::parse)
            .map_err(|e| self.err("sweep.metrics", e.message))?;
        let methods = parse_methods(self.text("sweep.methods")).map_err(|e| self.err("sweep.methods", e.message))?;
        // each grid point must build, so a bad grid fails at load time
        for &g in &grid {
            self.with(key, g).system().map_err(|e| self.err("sweep.grid", format!("{var} = {g}: {}", e.message)))?;
        }
        Ok(SweepSpec { var, key, grid, metrics, methods })
    }
}

/// `a,b,c` or `start:stop:step`.
fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse::<f64>().ok()).collect();
        match (parts.len(), nums) {
            (3, Some(v)) if v[2] != 0.0 && ((v[1] - v[0]) / v[2]) >= 0.0 => {
                let n = ((v[1] - v[0]) / v[2] + 1e-9).floor() as usize;
                (0..=n).map(|i| v[0] + i as f64 * v[2]).collect()
            }
            _ => return Err(format!("grid range must be start:stop:step, got '{text}'")),
        }
    } else {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| format!("grid value '{s}' is not a number")))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err("grid must be non-empty".into());
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err("grid values must be finite".into());
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err("grid must be strictly monotone".into());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "rf.alpha_r = 1.8\nrf.kappa_r = 4\nrf.mu_r = 2\nrf.m_r = 2\nthz.alpha_t = 1.5\nthz.mu_t = 1.2\npointing.sigma_jitter = 0.15\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = Config::parse(MINIMAL).unwrap();
        assert!(c.defaulted().iter().any(|k| k == "pointing.series_terms"));
        assert_eq!(c.pointing().unwrap().series_terms, 10);
        assert_eq!(c.modulation().unwrap(), ModulationParams { p: 0.5, q: 1.0 });
        assert_eq!(c.sim().unwrap().n_samples, 1_000_000);
        let s = c.sweep().unwrap();
        assert_eq!(s.grid, vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert_eq!(s.methods, vec![MethodKind::Analytic, MethodKind::MonteCarlo]);
    }

    #[test]
    fn invalid_values_name_the_invariant() {
        let e = Config::parse(&MINIMAL.replace("thz.mu_t = 1.2", "thz.mu_t = -1")).unwrap_err();
        assert!(e.message.contains("mu_t > 0"), "{e}");
        let e = Config::parse(&format!("{MINIMAL}bogus.key = 1\n")).unwrap_err();
        assert_eq!(e.line, Some(8));
        let e = Config::parse(&format!("{MINIMAL}rf.alpha_r = 2\n")).unwrap_err();
        assert!(e.message.contains("already set on line 1"));
        let e = Config::parse(&format!("{MINIMAL}no equals sign\n")).unwrap_err();
        assert_eq!(e.line, Some(8));
        let e = Config::parse(&MINIMAL.replace("rf.m_r = 2\n", "")).unwrap_err();
        assert!(e.message.contains("rf.m_r"));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:40:10").unwrap(), vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert_eq!(parse_grid("5, 1").unwrap(), vec![5.0, 1.0]);
        assert!(parse_grid("1,1").is_err());
        assert!(parse_grid("1,3,2").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0:1:-1").is_err());
    }

    #[test]
    fn sweep_overrides_one_key() {
        let c = Config::parse(MINIMAL).unwrap();
        let m = c.with("snr.gamma_bar_r_db", 30.0).system().unwrap();
        assert!((m.rf.gamma_bar() - 1000.0).abs() < 1e-9);
        assert!((m.thz.gamma_bar() - 1000.0).abs() < 1e-9);
        let mut lb = c.clone();
        lb.set_text("snr.source", "link-budget");
        let a = lb.with("link.d_r", 100.0).system().unwrap();
        let b = lb.with("link.d_r", 200.0).system().unwrap();
        assert!(a.rf.gamma_bar() > b.rf.gamma_bar());
        assert_eq!(a.thz.gamma_bar(), b.thz.gamma_bar());
    }
}
