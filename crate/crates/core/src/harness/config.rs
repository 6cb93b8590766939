//! Plain-text `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! grid = 1d:256
//! profile = gaussian:mu0=1,sigma=1
//! series_tol = 1e-12
//! horizon_tol = 1e-8
//! mesh_density = auto
//! seed = 0
//! times = 4,8,16,32,64
//! omegas = 0,1,2,4,8
//! t_end = 1
//! output = results.csv
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::coefficients::ProfileSpec;
use crate::error::{Error, Result};
use crate::spectral::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub period: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 1,
            points: 256,
            period: std::f64::consts::TAU,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.points, self.period)
    }
}

/// `1d:256`, `2d:64` or with an explicit period, `1d:128:10`.
impl FromStr for GridConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Config {
            key: "grid".into(),
            reason: format!("`{s}`: {reason}"),
        };
        let mut parts = s.trim().split(':');
        let dim = parts
            .next()
            .and_then(|d| d.strip_suffix('d'))
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| bad("expected `<n>d:<N>[:<L>]`"))?;
        let points = parts
            .next()
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| bad("missing point count"))?;
        let period = match parts.next() {
            Some(l) => l.parse::<f64>().map_err(|_| bad("period is not a number"))?,
            None => std::f64::consts::TAU,
        };
        if parts.next().is_some() {
            return Err(bad("too many fields"));
        }
        let cfg = GridConfig { dim, points, period };
        cfg.build().map_err(|e| bad(&e.to_string()))?;
        Ok(cfg)
    }
}

impl fmt::Display for GridConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}d:{}", self.dim, self.points)?;
        if self.period != std::f64::consts::TAU {
            write!(f, ":{}", self.period)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshDensity {
    /// Resolve the grid's highest frequency.
    Auto,
    Fixed(f64),
}

impl MeshDensity {
    pub fn value(&self) -> Option<f64> {
        match self {
            MeshDensity::Auto => None,
            MeshDensity::Fixed(d) => Some(*d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub profile: ProfileSpec,
    pub series_tol: f64,
    pub horizon_tol: f64,
    pub mesh_density: MeshDensity,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub times: Vec<f64>,
    pub omegas: Vec<f64>,
    pub t_end: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridConfig::default(),
            profile: "gaussian:mu0=1,sigma=1".parse().expect("default profile parses"),
            series_tol: 1e-12,
            horizon_tol: 1e-8,
            mesh_density: MeshDensity::Auto,
            seed: 0,
            output: None,
            times: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            omegas: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            t_end: 1.0,
        }
    }
}

/// Every problem found while reading a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<Error>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

pub const KEYS: [&str; 10] = [
    "grid",
    "profile",
    "series_tol",
    "horizon_tol",
    "mesh_density",
    "seed",
    "output",
    "times",
    "omegas",
    "t_end",
];

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| config_err(key, format!("`{value}` is not a number")))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(config_err(key, format!("must be finite and > 0, got {value}")))
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| config_err(key, format!("`{}` is not a number", v.trim())))?;
            if x.is_finite() && x >= 0.0 {
                Ok(x)
            } else {
                Err(config_err(key, format!("entries must be finite and >= 0, got {x}")))
            }
        })
        .collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "grid" => self.grid = value.parse()?,
            "profile" => {
                self.profile = value.parse().map_err(|e: Error| config_err(key, e.to_string()))?;
            }
            "series_tol" => self.series_tol = positive(key, value)?,
            "horizon_tol" => self.horizon_tol = positive(key, value)?,
            "mesh_density" => {
                self.mesh_density = if value == "auto" {
                    MeshDensity::Auto
                } else {
                    MeshDensity::Fixed(positive(key, value)?)
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| config_err(key, format!("`{value}` is not a non-negative integer")))?
            }
            "output" => self.output = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "times" => {
                let times = list(key, value)?;
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(config_err(key, "must be strictly increasing"));
                }
                self.times = times;
            }
            "omegas" => self.omegas = list(key, value)?,
            "t_end" => self.t_end = positive(key, value)?,
            other => {
                return Err(config_err(other, format!("unknown key; expected one of {}", KEYS.join(", "))));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("grid", self.grid.to_string());
        line("profile", self.profile.to_string());
        line("series_tol", self.series_tol.to_string());
        line("horizon_tol", self.horizon_tol.to_string());
        line(
            "mesh_density",
            match self.mesh_density {
                MeshDensity::Auto => "auto".into(),
                MeshDensity::Fixed(d) => d.to_string(),
            },
        );
        line("seed", self.seed.to_string());
        if let Some(p) = &self.output {
            line("output", p.display().to_string());
        }
        line("times", join(&self.times));
        line("omegas", join(&self.omegas));
        line("t_end", self.t_end.to_string());
        out
    }
}

/// Parse a config, collecting every error rather than stopping at the first.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigErrors> {
    let mut cfg = RunConfig::default();
    let mut errors = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(config_err(
                &format!("line {}", lineno + 1),
                format!("expected `key = value`, found `{line}`"),
            ));
            continue;
        };
        let key = key.trim();
        if seen.iter().any(|k| k == key) {
            errors.push(config_err(key, "given more than once"));
            continue;
        }
        seen.push(key.to_string());
        if let Err(e) = cfg.set(key, value) {
            errors.push(e);
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}
