//! Wave operators, their inverses, the scattering operator, the convergence
//! rate experiment and operator-norm estimation.
//!
//! All operators act on spectral lifted states `(|D| u, D_t u)`, where the
//! energy norm is the plain l2 norm.
//!
//! `W_+ = lim M Q(T, 0) M^{-1}` as `T -> inf`. For `W_-` the problem is run
//! backwards: `v(sigma) = u(-sigma)` solves the damped equation with the
//! coefficient `-b(-sigma, x)`, and in diagonal variables this gives
//! `Q(-T, 0) = P Q^(T, 0) P` where `Q^` belongs to the reflected coefficient
//! and `P` swaps the two components.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::DissipationModel;
use crate::dyson::{peano_baker_apply, propagate_physical, q_adjoint_apply, q_inverse_apply, q_ode_trajectory, SeriesOptions};
use crate::error::{Error, Result};
use crate::free::{apply_e0, apply_m, apply_u0, MDirection};
use crate::mesh::{resolving_density, QuadratureRule, TimeMesh};
use crate::modes::HORIZON_CAP;
use crate::par::Exec;
use crate::spectral::{lift_data, restore_data, Field, GridSpec, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveMethod {
    /// `M Q(T, 0) M^{-1}` from the series.
    ViaQ,
    /// `U0(-T) U(T, 0)` on physical data.
    ViaGroup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveOptions {
    /// Bound on the horizon truncation error `||W V - W(T) V||`.
    pub tol: f64,
    pub series: SeriesOptions,
    /// Mesh nodes per unit time; `None` resolves the grid's highest frequency.
    pub density: Option<f64>,
    pub horizon_cap: f64,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions {
            tol: 1e-8,
            series: SeriesOptions::default(),
            density: None,
            horizon_cap: HORIZON_CAP,
        }
    }
}

impl WaveOptions {
    fn mesh(&self, grid: &GridSpec, model: &DissipationModel, horizon: f64) -> Result<TimeMesh> {
        let density = self.density.unwrap_or_else(|| resolving_density(grid));
        TimeMesh::with_density(0.0, horizon, density, QuadratureRule::Simpson, model.time())
    }

    /// Horizon that certifies `tol` for inputs of norm `scale`.
    pub fn horizon(&self, sign: Sign, model: &DissipationModel, scale: f64) -> Result<f64> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol {} must be positive", self.tol)));
        }
        let tol = if scale > 0.0 { self.tol / scale } else { self.tol };
        oriented(sign, model).horizon(tol, self.horizon_cap)
    }
}

/// The coefficient whose forward evolution realizes the `sign` direction.
fn oriented(sign: Sign, model: &DissipationModel) -> DissipationModel {
    match sign {
        Sign::Plus => model.clone(),
        Sign::Minus => model.time_reversed(),
    }
}

/// Which evaluator of `Q(T, 0)` (or a related map) to apply.
#[derive(Clone, Copy)]
enum QAction {
    Series,
    Inverse,
    Adjoint,
}

/// `M X M^{-1} v` where `X` is `Q(+-T, 0)`, its inverse or its adjoint.
fn conjugated_q(
    sign: Sign,
    v: &StateVector,
    model: &DissipationModel,
    horizon: f64,
    opts: &WaveOptions,
    action: QAction,
) -> Result<StateVector> {
    let mut diag = apply_m(&v.to_spectral(), MDirection::MInverse);
    if sign == Sign::Minus {
        diag = diag.swapped();
    }
    let forward = oriented(sign, model);
    let out = if horizon == 0.0 {
        diag
    } else {
        let mesh = opts.mesh(v.grid(), &forward, horizon)?;
        match action {
            QAction::Series => peano_baker_apply(&diag, &forward, &mesh, opts.series)?.state,
            QAction::Inverse => q_inverse_apply(&diag, &forward, &mesh)?,
            QAction::Adjoint => q_adjoint_apply(&diag, &forward, &mesh)?,
        }
    };
    let out = if sign == Sign::Minus { out.swapped() } else { out };
    Ok(apply_m(&out, MDirection::M))
}

fn negate(f: &Field) -> Field {
    f.scaled(Complex64::new(-1.0, 0.0))
}

/// `U0(-+T) U(+-T, 0)` on physical data.
fn via_group(sign: Sign, v: &StateVector, model: &DissipationModel, horizon: f64, opts: &WaveOptions) -> Result<StateVector> {
    let (u1, u2) = restore_data(&v.to_spectral());
    if horizon == 0.0 {
        return lift_data(&u1, &u2);
    }
    let forward = oriented(sign, model);
    let mesh = opts.mesh(v.grid(), &forward, horizon)?;
    let (a, b) = match sign {
        Sign::Plus => propagate_physical((&u1, &u2), &forward, &mesh, opts.series)?,
        Sign::Minus => {
            // D_t changes sign under t -> -t
            let (a, b) = propagate_physical((&u1, &negate(&u2)), &forward, &mesh, opts.series)?;
            (a, negate(&b))
        }
    };
    let back = match sign {
        Sign::Plus => -horizon,
        Sign::Minus => horizon,
    };
    let (c, d) = apply_u0(back, (&a, &b))?;
    lift_data(&c, &d)
}

/// `W_+-` applied to `v` with the horizon picked from `opts.tol`.
pub fn wave_operator_apply(
    sign: Sign,
    v: &StateVector,
    model: &DissipationModel,
    opts: &WaveOptions,
    method: WaveMethod,
) -> Result<StateVector> {
    let horizon = opts.horizon(sign, model, v.norm())?;
    wave_operator_apply_at(sign, v, model, horizon, opts, method)
}

/// Finite-horizon surrogate `W_+-(T)`, `T >= 0`.
pub fn wave_operator_apply_at(
    sign: Sign,
    v: &StateVector,
    model: &DissipationModel,
    horizon: f64,
    opts: &WaveOptions,
    method: WaveMethod,
) -> Result<StateVector> {
    check_horizon(horizon)?;
    match method {
        WaveMethod::ViaQ => conjugated_q(sign, v, model, horizon, opts, QAction::Series),
        WaveMethod::ViaGroup => via_group(sign, v, model, horizon, opts),
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("horizon {horizon} must be finite and >= 0")))
    }
}

/// `W_+-^{-1} v` by backward integration at the certified horizon.
pub fn wave_operator_inverse_apply(
    sign: Sign,
    v: &StateVector,
    model: &DissipationModel,
    opts: &WaveOptions,
) -> Result<StateVector> {
    let horizon = opts.horizon(sign, model, v.norm())?;
    wave_operator_inverse_apply_at(sign, v, model, horizon, opts)
}

pub fn wave_operator_inverse_apply_at(
    sign: Sign,
    v: &StateVector,
    model: &DissipationModel,
    horizon: f64,
    opts: &WaveOptions,
) -> Result<StateVector> {
    check_horizon(horizon)?;
    conjugated_q(sign, v, model, horizon, opts, QAction::Inverse)
}

/// `W_+-(T)^* v`. `M^* = 2 M^{-1}`, so the adjoint is again an
/// `M`-conjugation, of `Q^*`.
pub fn wave_operator_adjoint_apply_at(
    sign: Sign,
    v: &StateVector,
    model: &DissipationModel,
    horizon: f64,
    opts: &WaveOptions,
) -> Result<StateVector> {
    check_horizon(horizon)?;
    conjugated_q(sign, v, model, horizon, opts, QAction::Adjoint)
}

/// `S v = W_+ W_-^{-1} v`.
pub fn scattering_apply(v: &StateVector, model: &DissipationModel, opts: &WaveOptions) -> Result<StateVector> {
    let w = wave_operator_inverse_apply(Sign::Minus, v, model, opts)?;
    wave_operator_apply(Sign::Plus, &w, model, opts, WaveMethod::ViaQ)
}

/// `S^{-1} v = W_- W_+^{-1} v`.
pub fn scattering_inverse_apply(v: &StateVector, model: &DissipationModel, opts: &WaveOptions) -> Result<StateVector> {
    let w = wave_operator_inverse_apply(Sign::Plus, v, model, opts)?;
    wave_operator_apply(Sign::Minus, &w, model, opts, WaveMethod::ViaQ)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub t: f64,
    /// `||U(t, 0) V - U0(t) W_+ V||_E`.
    pub err_e: f64,
    /// `int_t^inf ||b||_inf`.
    pub tail: f64,
    /// `err_e / (||V|| tail)`; NaN when the tail vanishes.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// Explicit horizon for `W_+`; `None` picks it from `horizon_fraction`.
    pub horizon: Option<f64>,
    /// The horizon is chosen with `tail(T) <= fraction * tail(t_max)`, so the
    /// truncation of `W_+` stays small against every swept error.
    pub horizon_fraction: f64,
    pub density: Option<f64>,
    pub horizon_cap: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            horizon: None,
            horizon_fraction: 0.02,
            density: None,
            horizon_cap: 1e5,
        }
    }
}

/// Distance between the damped evolution of `v` and the free evolution of
/// `W_+ v` at each of `times` (increasing, non-negative).
pub fn rate_sweep(v: &StateVector, model: &DissipationModel, times: &[f64], opts: &RateOptions) -> Result<Vec<RateRow>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) || !(times[0] >= 0.0) || !times[times.len() - 1].is_finite() {
        return Err(Error::InvalidArgument("sweep times must be finite, non-negative and increasing".into()));
    }
    let t_max = times[times.len() - 1];
    let horizon = match opts.horizon {
        Some(h) => h,
        None => {
            let growth = model.integral_sup_b(0.0, f64::INFINITY)?.exp();
            let target = opts.horizon_fraction * model.integral_sup_b(t_max, f64::INFINITY)?;
            model.horizon(target * growth, opts.horizon_cap)?
        }
    }
    .max(t_max);
    let v = v.to_spectral();
    let vnorm = v.norm();
    let tails = times
        .iter()
        .map(|&t| model.integral_sup_b(t, f64::INFINITY))
        .collect::<Result<Vec<_>>>()?;
    let rows = |errs: Vec<f64>| {
        times
            .iter()
            .zip(tails.iter())
            .zip(errs)
            .map(|((&t, &tail), err_e)| RateRow {
                t,
                err_e,
                tail,
                ratio: if tail > 0.0 && vnorm > 0.0 { err_e / (vnorm * tail) } else { f64::NAN },
            })
            .collect()
    };
    if horizon == 0.0 || model.integral_sup_b(0.0, horizon)? == 0.0 {
        return Ok(rows(vec![0.0; times.len()]));
    }
    let density = opts.density.unwrap_or_else(|| resolving_density(v.grid()));
    let mut stops = times.to_vec();
    stops.push(horizon);
    let mesh = TimeMesh::graded(0.0, horizon, density, QuadratureRule::Simpson, model.time(), &stops)?;
    let diag = apply_m(&v, MDirection::MInverse);
    let mut at = stops.clone();
    if at.len() >= 2 && at[at.len() - 1] == at[at.len() - 2] {
        at.pop();
    }
    let traj = q_ode_trajectory(&diag, model, &mesh, &at)?;
    let limit = &traj[traj.len() - 1];
    let errs = times
        .iter()
        .zip(&traj)
        .map(|(&t, q)| {
            let damped = apply_m(&apply_e0(t, 0.0, q)?, MDirection::M);
            let free = apply_m(&apply_e0(t, 0.0, limit)?, MDirection::M);
            Ok((&damped - &free).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows(errs))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub type Action = Arc<dyn Fn(&StateVector) -> Result<StateVector> + Send + Sync>;

/// A named linear map on lifted states with an optional adjoint.
#[derive(Clone)]
pub struct OperatorHandle {
    name: String,
    grid: GridSpec,
    /// Truncation horizon, when the operator is a finite-horizon surrogate.
    pub horizon: Option<f64>,
    /// Certified bound on the truncation error per unit input.
    pub bound: f64,
    action: Action,
    adjoint: Option<Action>,
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("name", &self.name)
            .field("grid", &self.grid)
            .field("horizon", &self.horizon)
            .field("bound", &self.bound)
            .field("adjoint", &self.adjoint.is_some())
            .finish()
    }
}

impl OperatorHandle {
    pub fn new(name: impl Into<String>, grid: &GridSpec, action: Action) -> Self {
        OperatorHandle {
            name: name.into(),
            grid: grid.clone(),
            horizon: None,
            bound: 0.0,
            action,
            adjoint: None,
        }
    }

    pub fn with_adjoint(mut self, adjoint: Action) -> Self {
        self.adjoint = Some(adjoint);
        self
    }

    pub fn with_horizon(mut self, horizon: f64, bound: f64) -> Self {
        self.horizon = Some(horizon);
        self.bound = bound;
        self
    }

    pub fn identity(grid: &GridSpec) -> Self {
        let id: Action = Arc::new(|v: &StateVector| Ok(v.to_spectral()));
        OperatorHandle::new("identity", grid, id.clone()).with_adjoint(id)
    }

    /// `E0(t, s)`.
    pub fn free(grid: &GridSpec, t: f64, s: f64) -> Self {
        OperatorHandle::new(format!("E0({t},{s})"), grid, Arc::new(move |v: &StateVector| apply_e0(t, s, &v.to_spectral())))
            .with_adjoint(Arc::new(move |v: &StateVector| apply_e0(s, t, &v.to_spectral())))
    }

    /// Finite-horizon wave operator `W_+-(T)`.
    pub fn wave_operator(sign: Sign, grid: &GridSpec, model: &DissipationModel, horizon: f64, opts: &WaveOptions) -> Result<Self> {
        check_horizon(horizon)?;
        model.check_grid(grid)?;
        let bound = oriented(sign, model).integral_sup_b(horizon, f64::INFINITY)?
            * oriented(sign, model).integral_sup_b(0.0, f64::INFINITY)?.exp();
        let (m1, m2, o1, o2) = (model.clone(), model.clone(), *opts, *opts);
        Ok(OperatorHandle::new(
            format!("W{sign}"),
            grid,
            Arc::new(move |v: &StateVector| wave_operator_apply_at(sign, v, &m1, horizon, &o1, WaveMethod::ViaQ)),
        )
        .with_adjoint(Arc::new(move |v: &StateVector| wave_operator_adjoint_apply_at(sign, v, &m2, horizon, &o2)))
        .with_horizon(horizon, bound))
    }

    /// `W_+-(T)^{-1}`; its adjoint is `M Q^{-*} M^{-1}`, the inverse flow of `-b`
    /// read through the adjoint identity `Q_b^* = Q_{-b}^{-1}`.
    pub fn wave_operator_inverse(
        sign: Sign,
        grid: &GridSpec,
        model: &DissipationModel,
        horizon: f64,
        opts: &WaveOptions,
    ) -> Result<Self> {
        check_horizon(horizon)?;
        model.check_grid(grid)?;
        let (m1, o1, o2) = (model.clone(), *opts, *opts);
        let negated = model.negated();
        Ok(OperatorHandle::new(
            format!("W{sign}^-1"),
            grid,
            Arc::new(move |v: &StateVector| wave_operator_inverse_apply_at(sign, v, &m1, horizon, &o1)),
        )
        .with_adjoint(Arc::new(move |v: &StateVector| {
            // (Q_b^{-1})^* = (Q_b^*)^{-1} = Q_{-b}
            conjugated_q(sign, v, &negated, horizon, &o2, QAction::Series)
        }))
        .with_horizon(horizon, 0.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn has_adjoint(&self) -> bool {
        self.adjoint.is_some()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        (self.action)(v)
    }

    pub fn apply_adjoint(&self, v: &StateVector) -> Result<StateVector> {
        match &self.adjoint {
            Some(a) => a(v),
            None => Err(Error::MissingAdjoint(self.name.clone())),
        }
    }

    pub fn apply_batch(&self, vs: &[StateVector], exec: Exec) -> Result<Vec<StateVector>> {
        exec.try_map(vs, |v| self.apply(v))
    }

    /// `A - I`.
    pub fn minus_identity(&self) -> Self {
        let a = self.action.clone();
        let action: Action = Arc::new(move |v: &StateVector| Ok(&a(v)? - &v.to_spectral()));
        let adjoint = self.adjoint.clone().map(|b| -> Action { Arc::new(move |v: &StateVector| Ok(&b(v)? - &v.to_spectral())) });
        OperatorHandle {
            name: format!("{} - I", self.name),
            grid: self.grid.clone(),
            horizon: self.horizon,
            bound: self.bound,
            action,
            adjoint,
        }
    }

    /// `self . other`.
    pub fn compose(&self, other: &OperatorHandle) -> Self {
        let (a, b) = (self.action.clone(), other.action.clone());
        let adjoint = match (&self.adjoint, &other.adjoint) {
            (Some(x), Some(y)) => {
                let (x, y) = (x.clone(), y.clone());
                Some(Arc::new(move |v: &StateVector| y(&x(v)?)) as Action)
            }
            _ => None,
        };
        OperatorHandle {
            name: format!("{} {}", self.name, other.name),
            grid: self.grid.clone(),
            horizon: None,
            bound: self.bound + other.bound,
            action: Arc::new(move |v: &StateVector| a(&b(v)?)),
            adjoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    PowerIteration,
    DenseAssembly,
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMode::PowerIteration => "power_iteration",
            NormMode::DenseAssembly => "dense_assembly",
        })
    }
}

/// Largest grid (points) for which [`NormMode::DenseAssembly`] is allowed.
pub const DENSE_LIMIT: usize = 1024;
const POWER_REL_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 500;

/// Dense matrix of `op` in the basis of lifted spectral coordinates.
pub fn assemble(op: &OperatorHandle, exec: Exec) -> Result<DMatrix<Complex64>> {
    let grid = op.grid();
    if grid.len() > DENSE_LIMIT {
        return Err(Error::DenseTooLarge { size: grid.len(), limit: DENSE_LIMIT });
    }
    let n = 2 * grid.len();
    let cols = exec.map_range(n, |j| op.apply(&StateVector::basis(grid, j)).map(|c| c.to_spectral().to_vec()));
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, x) in col?.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

/// l2 operator norm of `op`.
pub fn operator_norm_estimate(op: &OperatorHandle, mode: NormMode, exec: Exec) -> Result<f64> {
    match mode {
        NormMode::DenseAssembly => {
            let m = assemble(op, exec)?;
            Ok(m.singular_values().iter().cloned().fold(0.0, f64::max))
        }
        NormMode::PowerIteration => {
            if !op.has_adjoint() {
                return Err(Error::MissingAdjoint(op.name().to_string()));
            }
            let grid = op.grid();
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut draw = || {
                (0..grid.len())
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect::<Vec<_>>()
            };
            let (a, b) = (draw(), draw());
            let mut x = StateVector::from_spectral(grid, a, b)?;
            x = (1.0 / x.norm()) * &x;
            let mut sigma = 0.0;
            for _ in 0..POWER_MAX_ITERS {
                let ax = op.apply(&x)?;
                let next = ax.norm();
                let y = op.apply_adjoint(&ax)?;
                let ynorm = y.norm();
                if ynorm == 0.0 || next == 0.0 {
                    return Ok(next);
                }
                x = (1.0 / ynorm) * &y;
                if (next - sigma).abs() <= POWER_REL_TOL * next {
                    return Ok(next);
                }
                sigma = next;
            }
            Ok(sigma)
        }
    }
}
