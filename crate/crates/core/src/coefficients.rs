//! Separable dissipation coefficients `b(t, x) = mu(t) * beta(x)`.
//!
//! Every bound in the pipeline is phrased through `sup_x |b(t, x)|` and its
//! time integrals, so each model carries exact sup-norms and closed-form
//! (or certified-quadrature) tail integrals.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spectral::{Field, GridSpec, Representation};

/// Relative tolerance of the quadrature fallback.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

/// What a tabulated profile does outside its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TablePolicy {
    /// The profile vanishes outside the table.
    Zero,
    /// Queries outside the table are errors.
    Error,
}

/// Time profile `mu(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    /// `mu0` on `[t0, t1]`, zero elsewhere.
    Interval { mu0: f64, t0: f64, t1: f64 },
    /// `sign * mu0 * (1 + |t|)^(-p)`, `p > 1`.
    Algebraic { sign: f64, mu0: f64, p: f64 },
    /// `mu0 * exp(-t^2 / sigma^2)`.
    Gaussian { mu0: f64, sigma: f64 },
    /// Piecewise-linear interpolation of `values` at `t0 + j * dt`.
    Tabulated {
        t0: f64,
        dt: f64,
        values: Vec<f64>,
        outside: TablePolicy,
    },
}

impl TimeProfile {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match self {
            TimeProfile::Interval { mu0, t0, t1 } => {
                finite("mu0", *mu0)?;
                finite("t0", *t0)?;
                finite("t1", *t1)?;
                if t0 >= t1 {
                    return Err("interval requires t0 < t1".into());
                }
            }
            TimeProfile::Algebraic { sign, mu0, p } => {
                finite("mu0", *mu0)?;
                if *sign != 1.0 && *sign != -1.0 {
                    return Err("sign must be +1 or -1".into());
                }
                if *mu0 < 0.0 {
                    return Err("mu0 must be non-negative; use sign=-1 for anti-damping".into());
                }
                if !(p.is_finite() && *p > 1.0) {
                    return Err(format!(
                        "p = {p} violates p > 1: the coefficient must be integrable in time (L1-in-time assumption)"
                    ));
                }
            }
            TimeProfile::Gaussian { mu0, sigma } => {
                finite("mu0", *mu0)?;
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err("sigma must be positive".into());
                }
            }
            TimeProfile::Tabulated { t0, dt, values, .. } => {
                finite("t0", *t0)?;
                if !(dt.is_finite() && *dt > 0.0) {
                    return Err("dt must be positive".into());
                }
                if values.len() < 2 {
                    return Err("a table needs at least two values".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err("table values must be finite".into());
                }
            }
        }
        Ok(())
    }

    fn table_end(t0: f64, dt: f64, len: usize) -> f64 {
        t0 + dt * (len - 1) as f64
    }

    /// `mu(t)`. Tabulated profiles read zero outside their table; use
    /// [`TimeProfile::check_span`] to enforce [`TablePolicy::Error`].
    pub fn mu(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Interval { mu0, t0, t1 } => {
                if *t0 <= t && t <= *t1 {
                    *mu0
                } else {
                    0.0
                }
            }
            TimeProfile::Algebraic { sign, mu0, p } => sign * mu0 * (1.0 + t.abs()).powf(-p),
            TimeProfile::Gaussian { mu0, sigma } => mu0 * (-(t / sigma).powi(2)).exp(),
            TimeProfile::Tabulated { t0, dt, values, .. } => {
                let end = Self::table_end(*t0, *dt, values.len());
                if t < *t0 || t > end {
                    return 0.0;
                }
                let x = (t - t0) / dt;
                let j = (x.floor() as usize).min(values.len() - 2);
                let frac = x - j as f64;
                values[j] * (1.0 - frac) + values[j + 1] * frac
            }
        }
    }

    /// `mu(t)` as seen from inside a step whose midpoint is `mid`.
    ///
    /// Meshes never straddle a breakpoint, so the midpoint decides on which
    /// side of a jump the endpoint values are taken.
    pub fn mu_on(&self, t: f64, mid: f64) -> f64 {
        match self {
            TimeProfile::Interval { mu0, t0, t1 } => {
                if *t0 <= mid && mid <= *t1 {
                    *mu0
                } else {
                    0.0
                }
            }
            TimeProfile::Tabulated { t0, dt, values, .. } => {
                let end = Self::table_end(*t0, *dt, values.len());
                if mid < *t0 || mid > end {
                    0.0
                } else {
                    self.mu(t.clamp(*t0, end))
                }
            }
            _ => self.mu(t),
        }
    }

    /// Times where the profile (or its derivative) jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TimeProfile::Interval { t0, t1, .. } => vec![*t0, *t1],
            TimeProfile::Algebraic { .. } => vec![0.0],
            TimeProfile::Gaussian { .. } => Vec::new(),
            TimeProfile::Tabulated { t0, dt, values, .. } => {
                (0..values.len()).map(|j| t0 + dt * j as f64).collect()
            }
        }
    }

    /// Time scale on which the profile varies smoothly.
    pub fn resolution_scale(&self) -> f64 {
        match self {
            TimeProfile::Interval { .. } => f64::INFINITY,
            TimeProfile::Algebraic { p, .. } => 1.0 / p.max(1.0),
            TimeProfile::Gaussian { sigma, .. } => *sigma,
            TimeProfile::Tabulated { dt, .. } => *dt,
        }
    }

    pub fn check_span(&self, s: f64, t: f64) -> Result<()> {
        if let TimeProfile::Tabulated {
            t0,
            dt,
            values,
            outside: TablePolicy::Error,
        } = self
        {
            let end = Self::table_end(*t0, *dt, values.len());
            for x in [s, t] {
                if x.is_infinite() {
                    return Err(Error::InfiniteEndpoint);
                }
                if x < *t0 || x > end {
                    return Err(Error::OutsideTable {
                        t: x,
                        start: *t0,
                        end,
                    });
                }
            }
        }
        Ok(())
    }

    fn support(&self) -> (f64, f64) {
        match self {
            TimeProfile::Interval { t0, t1, .. } => (*t0, *t1),
            TimeProfile::Tabulated { t0, dt, values, .. } => {
                (*t0, Self::table_end(*t0, *dt, values.len()))
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Signed integral of `mu` over `[s, t]`, `s <= t`, endpoints may be infinite.
    pub fn integral(&self, s: f64, t: f64) -> Result<f64> {
        self.integral_impl(s, t, false)
    }

    /// Integral of `|mu|` over `[s, t]`.
    pub fn integral_abs(&self, s: f64, t: f64) -> Result<f64> {
        self.integral_impl(s, t, true)
    }

    fn integral_impl(&self, s: f64, t: f64, absolute: bool) -> Result<f64> {
        if s.is_nan() || t.is_nan() || s > t {
            return Err(Error::ReversedInterval { s, t });
        }
        self.check_span(s, t)?;
        if s == t {
            return Ok(0.0);
        }
        let value = match self {
            TimeProfile::Interval { mu0, t0, t1 } => {
                let lo = s.max(*t0);
                let hi = t.min(*t1);
                let m = if absolute { mu0.abs() } else { *mu0 };
                if hi > lo {
                    m * (hi - lo)
                } else {
                    0.0
                }
            }
            TimeProfile::Algebraic { sign, mu0, p } => {
                let m = if absolute { *mu0 } else { sign * mu0 };
                m * algebraic_integral(s, t, *p)
            }
            TimeProfile::Gaussian { mu0, sigma } => {
                let m = if absolute { mu0.abs() } else { *mu0 };
                m * gaussian_integral(s, t, *sigma)
            }
            TimeProfile::Tabulated { .. } => self.quadrature_integral_impl(s, t, absolute)?,
        };
        Ok(value)
    }

    /// Adaptive quadrature of `mu` (or `|mu|`) split at the breakpoints.
    /// Infinite endpoints are clipped to the support, so only compactly
    /// supported profiles accept them here.
    pub fn quadrature_integral(&self, s: f64, t: f64, absolute: bool) -> Result<f64> {
        if s > t {
            return Err(Error::ReversedInterval { s, t });
        }
        self.check_span(s, t)?;
        self.quadrature_integral_impl(s, t, absolute)
    }

    fn quadrature_integral_impl(&self, s: f64, t: f64, absolute: bool) -> Result<f64> {
        let (lo, hi) = self.support();
        let a = s.max(lo);
        let b = t.min(hi);
        if a.is_infinite() || b.is_infinite() {
            return Err(Error::InfiniteEndpoint);
        }
        if a >= b {
            return Ok(0.0);
        }
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&x| x > a && x < b));
        cuts.push(b);
        let total = cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let f = |x: f64| {
                    let v = self.mu_on(x, mid);
                    if absolute {
                        v.abs()
                    } else {
                        v
                    }
                };
                quadrature::integrate(&f, w[0], w[1], QUADRATURE_REL_TOL)
            })
            .sum();
        Ok(total)
    }

    /// The profile `sigma -> -mu(-sigma)` governing the time-reversed problem.
    pub fn time_reversed(&self) -> TimeProfile {
        match self {
            TimeProfile::Interval { mu0, t0, t1 } => TimeProfile::Interval {
                mu0: -mu0,
                t0: -t1,
                t1: -t0,
            },
            TimeProfile::Algebraic { sign, mu0, p } => TimeProfile::Algebraic {
                sign: -sign,
                mu0: *mu0,
                p: *p,
            },
            TimeProfile::Gaussian { mu0, sigma } => TimeProfile::Gaussian {
                mu0: -mu0,
                sigma: *sigma,
            },
            TimeProfile::Tabulated {
                t0,
                dt,
                values,
                outside,
            } => TimeProfile::Tabulated {
                t0: -Self::table_end(*t0, *dt, values.len()),
                dt: *dt,
                values: values.iter().rev().map(|v| -v).collect(),
                outside: *outside,
            },
        }
    }

    /// `-mu`.
    pub fn negated(&self) -> TimeProfile {
        match self {
            TimeProfile::Interval { mu0, t0, t1 } => TimeProfile::Interval {
                mu0: -mu0,
                t0: *t0,
                t1: *t1,
            },
            TimeProfile::Algebraic { sign, mu0, p } => TimeProfile::Algebraic {
                sign: -sign,
                mu0: *mu0,
                p: *p,
            },
            TimeProfile::Gaussian { mu0, sigma } => TimeProfile::Gaussian {
                mu0: -mu0,
                sigma: *sigma,
            },
            TimeProfile::Tabulated {
                t0,
                dt,
                values,
                outside,
            } => TimeProfile::Tabulated {
                t0: *t0,
                dt: *dt,
                values: values.iter().map(|v| -v).collect(),
                outside: *outside,
            },
        }
    }
}

/// `int_s^t (1 + |tau|)^(-p) dtau`, computed without cancellation in the tails.
fn algebraic_integral(s: f64, t: f64, p: f64) -> f64 {
    // one-sided antiderivative from |a| to |b| on a half-line
    let half = |a: f64, b: f64| {
        let fa = if a.is_infinite() { 0.0 } else { (1.0 + a).powf(1.0 - p) };
        let fb = if b.is_infinite() { 0.0 } else { (1.0 + b).powf(1.0 - p) };
        (fa - fb) / (p - 1.0)
    };
    if s >= 0.0 {
        half(s, t)
    } else if t <= 0.0 {
        half(-t, -s)
    } else {
        half(0.0, -s) + half(0.0, t)
    }
}

/// `int_s^t exp(-tau^2 / sigma^2) dtau` using `erfc` in the tails.
fn gaussian_integral(s: f64, t: f64, sigma: f64) -> f64 {
    let c = 0.5 * sigma * PI.sqrt();
    let tail = |x: f64| if x.is_infinite() { 0.0 } else { erfc(x / sigma) };
    if s >= 0.0 {
        c * (tail(s) - tail(t))
    } else if t <= 0.0 {
        c * (tail(-t) - tail(-s))
    } else {
        let e = |x: f64| if x.is_infinite() { x.signum() } else { erf(x / sigma) };
        c * (e(t) - e(s))
    }
}

/// Space profile `beta(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceProfile {
    Constant,
    /// `height * exp(-d(x, center)^2 / width^2)` with periodic distance `d`;
    /// the centre is the point `(center, ..., center)`.
    Bump { center: f64, width: f64, height: f64 },
    /// Values on the grid in storage order.
    Tabulated(Vec<f64>),
}

impl SpaceProfile {
    pub fn sample(&self, grid: &GridSpec) -> Result<Option<Vec<f64>>> {
        match self {
            SpaceProfile::Constant => Ok(None),
            SpaceProfile::Bump {
                center,
                width,
                height,
            } => {
                let l = grid.period();
                let dim = grid.dim();
                let values = (0..grid.len())
                    .map(|i| {
                        let x = grid.coordinates(i);
                        let d2: f64 = x[..dim]
                            .iter()
                            .map(|&xa| {
                                let d = (xa - center).rem_euclid(l);
                                d.min(l - d).powi(2)
                            })
                            .sum();
                        height * (-d2 / (width * width)).exp()
                    })
                    .collect();
                Ok(Some(values))
            }
            SpaceProfile::Tabulated(values) => {
                if values.len() != grid.len() {
                    return Err(Error::InvalidGrid(format!(
                        "tabulated space profile has {} values, grid has {}",
                        values.len(),
                        grid.len()
                    )));
                }
                Ok(Some(values.clone()))
            }
        }
    }
}

/// Parsed coefficient description, independent of any grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub time: TimeProfile,
    pub space: SpaceProfile,
}

impl ProfileSpec {
    pub fn build(&self, grid: &GridSpec) -> Result<DissipationModel> {
        DissipationModel::on_grid(self.time.clone(), self.space.clone(), grid)
    }
}

fn parse_params(spec: &str, body: &str) -> Result<Vec<(String, String)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::InvalidProfile {
                spec: spec.to_string(),
                reason: format!("expected key=value, found `{kv}`"),
            })?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

struct Params<'a> {
    spec: &'a str,
    kind: &'a str,
    entries: Vec<(String, String)>,
}

impl<'a> Params<'a> {
    fn err(&self, reason: String) -> Error {
        Error::InvalidProfile {
            spec: self.spec.to_string(),
            reason,
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| self.err(format!("{key}: `{v}` is not a number"))),
            None => default.ok_or_else(|| self.err(format!("{} requires `{key}`", self.kind))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((k, _)) = self.entries.first() {
            return Err(self.err(format!("unknown key `{k}` for {}", self.kind)));
        }
        Ok(())
    }
}

fn parse_time(spec: &str, part: &str) -> Result<TimeProfile> {
    let (kind, body) = part.split_once(':').unwrap_or((part, ""));
    let kind = kind.trim();
    let mut p = Params {
        spec,
        kind,
        entries: parse_params(spec, body)?,
    };
    let profile = match kind {
        "interval" => TimeProfile::Interval {
            mu0: p.number("mu0", None)?,
            t0: p.number("t0", Some(0.0))?,
            t1: p.number("t1", Some(1.0))?,
        },
        "algebraic" => TimeProfile::Algebraic {
            p: p.number("p", None)?,
            mu0: p.number("mu0", Some(1.0))?,
            sign: p.number("sign", Some(1.0))?,
        },
        "gaussian" => TimeProfile::Gaussian {
            mu0: p.number("mu0", Some(1.0))?,
            sigma: p.number("sigma", Some(1.0))?,
        },
        "tabulated" => {
            let t0 = p.number("t0", Some(0.0))?;
            let dt = p.number("dt", None)?;
            let raw = p
                .take("values")
                .ok_or_else(|| p.err("tabulated requires `values`".into()))?;
            let values = raw
                .split(';')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| p.err(format!("values: `{v}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            let outside = match p.take("outside").as_deref() {
                None | Some("zero") => TablePolicy::Zero,
                Some("error") => TablePolicy::Error,
                Some(other) => {
                    return Err(p.err(format!("outside: `{other}` is not zero|error")));
                }
            };
            TimeProfile::Tabulated {
                t0,
                dt,
                values,
                outside,
            }
        }
        other => return Err(p.err(format!("unknown time profile `{other}`"))),
    };
    p.finish()?;
    profile.validate().map_err(|reason| Error::InvalidProfile {
        spec: spec.to_string(),
        reason,
    })?;
    Ok(profile)
}

fn parse_space(spec: &str, part: &str) -> Result<SpaceProfile> {
    let (kind, body) = part.split_once(':').unwrap_or((part, ""));
    let kind = kind.trim();
    let mut p = Params {
        spec,
        kind,
        entries: parse_params(spec, body)?,
    };
    let profile = match kind {
        "const" | "constant" => SpaceProfile::Constant,
        "bump" => {
            let center = p.number("center", Some(PI))?;
            let width = p.number("width", Some(0.5))?;
            let height = p.number("height", Some(1.0))?;
            if !(width.is_finite() && width > 0.0) {
                return Err(p.err("bump width must be positive".into()));
            }
            if !(center.is_finite() && height.is_finite()) {
                return Err(p.err("bump center and height must be finite".into()));
            }
            SpaceProfile::Bump {
                center,
                width,
                height,
            }
        }
        other => return Err(p.err(format!("unknown space profile `{other}`"))),
    };
    p.finish()?;
    Ok(profile)
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (time_part, space_part) = match s.split_once('*') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let time = parse_time(s, time_part)?;
        let space = match space_part {
            Some(part) => parse_space(s, part)?,
            None => SpaceProfile::Constant,
        };
        Ok(ProfileSpec { time, space })
    }
}

impl fmt::Display for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Interval { mu0, t0, t1 } => {
                write!(f, "interval:mu0={mu0},t0={t0},t1={t1}")
            }
            TimeProfile::Algebraic { sign, mu0, p } => {
                write!(f, "algebraic:p={p},mu0={mu0},sign={sign}")
            }
            TimeProfile::Gaussian { mu0, sigma } => write!(f, "gaussian:mu0={mu0},sigma={sigma}"),
            TimeProfile::Tabulated {
                t0,
                dt,
                values,
                outside,
            } => {
                let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                let policy = match outside {
                    TablePolicy::Zero => "zero",
                    TablePolicy::Error => "error",
                };
                write!(
                    f,
                    "tabulated:t0={t0},dt={dt},values={},outside={policy}",
                    joined.join(";")
                )
            }
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.time)?;
        match &self.space {
            SpaceProfile::Constant => Ok(()),
            SpaceProfile::Bump {
                center,
                width,
                height,
            } => write!(f, "*bump:center={center},width={width},height={height}"),
            // not expressible in the grammar
            SpaceProfile::Tabulated(_) => write!(f, "*tabulated"),
        }
    }
}

/// `b(t, x) = mu(t) beta(x)` with `beta` sampled on a grid (or identically one).
#[derive(Debug, Clone)]
pub struct DissipationModel {
    time: TimeProfile,
    space: SpaceProfile,
    beta: Option<Arc<Vec<f64>>>,
    sup_beta: f64,
}

impl DissipationModel {
    /// `beta == 1`: the coefficient does not depend on `x`.
    pub fn x_independent(time: TimeProfile) -> Result<Self> {
        time.validate().map_err(|reason| Error::InvalidProfile {
            spec: time.to_string(),
            reason,
        })?;
        Ok(DissipationModel {
            time,
            space: SpaceProfile::Constant,
            beta: None,
            sup_beta: 1.0,
        })
    }

    pub fn on_grid(time: TimeProfile, space: SpaceProfile, grid: &GridSpec) -> Result<Self> {
        let mut model = Self::x_independent(time)?;
        if let Some(values) = space.sample(grid)? {
            model.sup_beta = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            model.beta = Some(Arc::new(values));
        }
        model.space = space;
        Ok(model)
    }

    /// `b == 0`.
    pub fn zero() -> Self {
        DissipationModel {
            time: TimeProfile::Interval {
                mu0: 0.0,
                t0: 0.0,
                t1: 1.0,
            },
            space: SpaceProfile::Constant,
            beta: None,
            sup_beta: 1.0,
        }
    }

    pub fn time(&self) -> &TimeProfile {
        &self.time
    }

    pub fn space(&self) -> &SpaceProfile {
        &self.space
    }

    pub fn beta(&self) -> Option<&[f64]> {
        self.beta.as_deref().map(|v| v.as_slice())
    }

    pub fn sup_beta(&self) -> f64 {
        self.sup_beta
    }

    pub fn is_x_independent(&self) -> bool {
        self.beta.is_none()
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        match &self.beta {
            Some(b) if b.len() != grid.len() => Err(Error::GridMismatch),
            _ => Ok(()),
        }
    }

    /// Physical field `b(t, .)`.
    pub fn eval_b(&self, t: f64, grid: &GridSpec) -> Result<Field> {
        self.check_grid(grid)?;
        self.time.check_span(t, t)?;
        let mu = self.time.mu(t);
        let values = match &self.beta {
            None => vec![Complex64::new(mu, 0.0); grid.len()],
            Some(beta) => beta.iter().map(|b| Complex64::new(mu * b, 0.0)).collect(),
        };
        Field::from_values(grid, Representation::Physical, values)
    }

    /// `sup_x |b(t, x)|`.
    pub fn sup_norm_b(&self, t: f64) -> f64 {
        self.time.mu(t).abs() * self.sup_beta
    }

    /// `int_s^t sup_x |b(tau, x)| dtau`, `s <= t`, endpoints may be infinite.
    pub fn integral_sup_b(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.sup_beta * self.time.integral_abs(s, t)?)
    }

    /// Signed `int_s^t mu`.
    pub fn integral_mu(&self, s: f64, t: f64) -> Result<f64> {
        self.time.integral(s, t)
    }

    /// Coefficient of the time-reversed problem, `-b(-t, x)`.
    pub fn time_reversed(&self) -> Self {
        DissipationModel {
            time: self.time.time_reversed(),
            ..self.clone()
        }
    }

    /// `-b(t, x)`.
    pub fn negated(&self) -> Self {
        DissipationModel {
            time: self.time.negated(),
            ..self.clone()
        }
    }

    /// Smallest horizon `T >= 0` (rounded up to a multiple of 1/64) with
    /// `int_T^inf ||b||_inf * exp(int_0^inf ||b||_inf) <= tol`.
    pub fn horizon(&self, tol: f64, cap: f64) -> Result<f64> {
        let growth = self.integral_sup_b(0.0, f64::INFINITY)?.exp();
        let target = tol / growth;
        let tail = |t: f64| self.integral_sup_b(t, f64::INFINITY);
        if tail(0.0)? <= target {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while tail(hi)? > target {
            if hi >= cap {
                return Err(Error::HorizonCapExceeded { cap, tol });
            }
            hi = (2.0 * hi).min(cap);
        }
        let mut lo = hi / 2.0;
        if hi == 1.0 {
            lo = 0.0;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if tail(mid)? <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let rounded = (hi * 64.0).ceil() / 64.0;
        Ok(if rounded <= cap { rounded } else { hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> ProfileSpec {
        s.parse().unwrap()
    }

    fn model(s: &str) -> DissipationModel {
        DissipationModel::x_independent(spec(s).time).unwrap()
    }

    #[test]
    fn eval_b_examples() {
        let grid = GridSpec::periodic_2pi(1, 8).unwrap();
        let m = model("interval:mu0=0.3,t0=0,t1=1");
        let b = m.eval_b(0.5, &grid).unwrap();
        assert!(b.values().iter().all(|v| *v == Complex64::new(0.3, 0.0)));
        let b = m.eval_b(2.0, &grid).unwrap();
        assert!(b.values().iter().all(|v| *v == Complex64::default()));
        let m = model("algebraic:p=2,mu0=1");
        let b = m.eval_b(1.0, &grid).unwrap();
        assert!(b.values().iter().all(|v| (v.re - 0.25).abs() < 1e-15));
    }

    #[test]
    fn eval_b_outside_strict_table_errors() {
        let grid = GridSpec::periodic_2pi(1, 8).unwrap();
        let m = model("tabulated:t0=0,dt=0.5,values=0;1;0,outside=error");
        assert!(matches!(m.eval_b(2.0, &grid), Err(Error::OutsideTable { .. })));
        assert!(m.eval_b(0.75, &grid).is_ok());
    }

    #[test]
    fn sup_norm_examples() {
        let m = model("algebraic:p=2,mu0=1");
        assert_eq!(m.sup_norm_b(0.0), 1.0);
        let m = model("interval:mu0=0.3,t0=0,t1=1");
        assert_eq!(m.sup_norm_b(5.0), 0.0);
        let grid = GridSpec::periodic_2pi(1, 64).unwrap();
        let m = spec("interval:mu0=2,t0=0,t1=1*bump:center=0,width=0.5,height=0.5")
            .build(&grid)
            .unwrap();
        assert!((m.sup_beta() - 0.5).abs() < 1e-15);
        assert!((m.sup_norm_b(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn integral_examples() {
        let m = model("algebraic:p=2,mu0=1");
        assert!((m.integral_sup_b(3.0, f64::INFINITY).unwrap() - 0.25).abs() < 1e-15);
        let m = model("interval:mu0=0.3,t0=0,t1=1");
        assert!((m.integral_sup_b(0.0, 1.0).unwrap() - 0.3).abs() < 1e-15);
        let m = model("gaussian:mu0=1,sigma=1");
        let total = m.integral_sup_b(f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((total - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn reversed_interval_is_an_error() {
        let m = model("gaussian:mu0=1,sigma=1");
        assert!(matches!(
            m.integral_sup_b(2.0, 1.0),
            Err(Error::ReversedInterval { .. })
        ));
    }

    #[test]
    fn strict_table_rejects_infinite_endpoint() {
        let m = model("tabulated:t0=0,dt=1,values=1;2,outside=error");
        assert_eq!(
            m.integral_sup_b(0.0, f64::INFINITY).unwrap_err(),
            Error::InfiniteEndpoint
        );
        let m = model("tabulated:t0=0,dt=1,values=1;2");
        assert!((m.integral_sup_b(0.0, f64::INFINITY).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn signed_and_absolute_integrals() {
        let m = model("algebraic:p=3,mu0=2,sign=-1");
        let abs = m.integral_sup_b(-1.0, 2.0).unwrap();
        let signed = m.integral_mu(-1.0, 2.0).unwrap();
        assert!((abs + signed).abs() < 1e-15);
        assert!(abs > 0.0);
    }

    #[test]
    fn p_equal_one_names_the_constraint() {
        let err = "algebraic:p=1,mu0=1".parse::<ProfileSpec>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p > 1") && msg.contains("L1-in-time"), "{msg}");
    }

    #[test]
    fn grammar_errors() {
        for bad in [
            "interval:t0=0",
            "interval:mu0=1,t0=2,t1=1",
            "gaussian:mu0=1,sigma=-1",
            "gaussian:mu0=1,foo=2",
            "wiggle:mu0=1",
            "gaussian:mu0=abc",
            "gaussian:mu0=1*bump:width=0",
            "gaussian:mu0=1*blob",
        ] {
            assert!(bad.parse::<ProfileSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grammar_round_trips() {
        for s in [
            "algebraic:p=2,mu0=1",
            "interval:mu0=0.3,t0=0,t1=1",
            "gaussian:mu0=1,sigma=1*bump:center=3.14,width=0.5,height=1",
            "tabulated:t0=-1,dt=0.25,values=0;0.5;0.25;0,outside=error",
        ] {
            let a = spec(s);
            let b: ProfileSpec = a.to_string().parse().unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn time_reversal_flips_sign_and_time() {
        for s in [
            "interval:mu0=0.3,t0=0.25,t1=1",
            "algebraic:p=2.5,mu0=1",
            "gaussian:mu0=0.7,sigma=0.5",
            "tabulated:t0=-0.5,dt=0.5,values=0;0.3;0.1;0",
        ] {
            let p = spec(s).time;
            let r = p.time_reversed();
            for &t in &[-2.0, -0.75, -0.3, 0.1, 0.6, 1.7] {
                assert!((r.mu(t) + p.mu(-t)).abs() < 1e-15, "{s} at {t}");
            }
        }
    }

    #[test]
    fn mu_on_takes_one_sided_values() {
        let p = spec("interval:mu0=0.3,t0=0,t1=1").time;
        assert_eq!(p.mu_on(1.0, 0.9), 0.3);
        assert_eq!(p.mu_on(1.0, 1.1), 0.0);
        assert_eq!(p.mu_on(0.0, -0.1), 0.0);
    }

    #[test]
    fn horizon_examples() {
        let m = model("interval:mu0=0.3,t0=0,t1=1");
        assert_eq!(m.horizon(1e-8, 100.0).unwrap(), 1.0);
        let m = model("gaussian:mu0=1,sigma=1");
        let t = m.horizon(1e-8, 100.0).unwrap();
        let total = m.integral_sup_b(0.0, f64::INFINITY).unwrap();
        assert!(m.integral_sup_b(t, f64::INFINITY).unwrap() * total.exp() <= 1e-8);
        assert!(t > 3.0 && t < 6.0);
        let m = model("algebraic:p=2,mu0=1");
        assert!(matches!(
            m.horizon(1e-8, 1000.0),
            Err(Error::HorizonCapExceeded { .. })
        ));
    }
}
