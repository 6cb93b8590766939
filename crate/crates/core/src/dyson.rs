//! The residual propagator `Q(t, s)` and the full propagator `E = E0 Q`.
//!
//! `Q(t, s)` solves `d/dt Q = i R(t, s) Q`, `Q(s, s) = I`. Two independent
//! evaluators are provided:
//!
//! * [`peano_baker_apply`] sums the time-ordered series
//!   `V_k(tau) = i int_s^tau R(tau', s) V_{k-1}(tau') dtau'`, each term
//!   tabulated on the mesh by cumulative trapezoid or Simpson quadrature.
//!   Term `k` is bounded by `c^k / k!` with `c = int_s^t ||b||_inf`, so the
//!   truncation order is picked up front from [`tail_sum`] and the series is
//!   evaluated in a single streaming pass (memory `O(K)` states, not `O(K M)`).
//! * [`q_ode_apply`] integrates the ODE with the classical fourth-order
//!   Runge-Kutta method; [`q_inverse_apply`] runs it backwards from `t` to
//!   obtain `Q(t, s)^{-1}`.

use num_complex::Complex64;

use crate::coefficients::DissipationModel;
use crate::error::{Error, Result};
use crate::free::{apply_e0, apply_m, phases, MDirection, Twist};
use crate::mesh::{simpson_weights, QuadratureRule, TimeMesh};
use crate::spectral::{lift_data, restore_data, Field, GridSpec, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Target bound on the discarded tail, `remainder_bound(K + 1) * ||V||`.
    pub tol: f64,
    /// Hard cap on the truncation order.
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            tol: 1e-12,
            max_terms: 80,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeriesResult {
    /// `sum_{k <= K} V_k(t)`.
    pub state: StateVector,
    pub terms_used: usize,
    /// Certified bound on the discarded tail, already scaled by `||V||`.
    pub remainder_bound: f64,
    /// `||V_k(t)||` for `k = 0..=K`.
    pub per_term_norms: Vec<f64>,
    /// `false` when `max_terms` was hit before `tol`; the state is still usable.
    pub converged: bool,
}

/// `sum_{j >= k} c^j / j!` for `c >= 0`.
pub fn tail_sum(k: usize, c: f64) -> f64 {
    assert!(c >= 0.0, "tail_sum needs c >= 0");
    match k {
        0 => return c.exp(),
        1 => return c.exp_m1(),
        _ => {}
    }
    if c == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    for j in 1..=k {
        term *= c / j as f64;
    }
    let mut sum = 0.0;
    let mut j = k;
    loop {
        sum += term;
        j += 1;
        term *= c / j as f64;
        if (j as f64 > c && term <= 1e-17 * sum) || term == 0.0 {
            break;
        }
    }
    sum
}

/// Bound on the norm of the series tail from order `k` on, per unit input.
pub fn remainder_bound(k: usize, s: f64, t: f64, model: &DissipationModel) -> Result<f64> {
    Ok(tail_sum(k, model.integral_sup_b(s, t)?))
}

fn split(v: &[Complex64]) -> (&[Complex64], &[Complex64]) {
    v.split_at(v.len() / 2)
}

fn split_mut(v: &mut [Complex64]) -> (&mut [Complex64], &mut [Complex64]) {
    let half = v.len() / 2;
    v.split_at_mut(half)
}

fn flatten(v: &StateVector) -> Vec<Complex64> {
    v.to_vec()
}

fn unflatten(grid: &GridSpec, flat: Vec<Complex64>) -> StateVector {
    let len = grid.len();
    let mut first = flat;
    let second = first.split_off(len);
    StateVector::from_spectral(grid, first, second).expect("lengths match grid")
}

fn check_inputs(v: &StateVector, model: &DissipationModel, mesh: &TimeMesh) -> Result<()> {
    v.require_spectral()?;
    model.check_grid(v.grid())?;
    model.time().check_span(mesh.start(), mesh.end())
}

/// Streaming evaluation of the truncated Peano-Baker series applied to `v`
/// over `[mesh.start(), mesh.end()]`.
pub fn peano_baker_apply(
    v: &StateVector,
    model: &DissipationModel,
    mesh: &TimeMesh,
    opts: SeriesOptions,
) -> Result<SeriesResult> {
    check_inputs(v, model, mesh)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("series tol {} must be positive", opts.tol)));
    }
    let (s, t) = (mesh.start(), mesh.end());
    let c = model.integral_sup_b(s, t)?;
    let vnorm = v.norm();
    let mut terms = 0;
    while terms < opts.max_terms && tail_sum(terms + 1, c) * vnorm > opts.tol {
        terms += 1;
    }
    let remainder = tail_sum(terms + 1, c) * vnorm;
    let converged = remainder <= opts.tol;
    if terms == 0 {
        return Ok(SeriesResult {
            state: v.clone(),
            terms_used: 0,
            remainder_bound: remainder,
            per_term_norms: vec![vnorm],
            converged,
        });
    }

    let grid = v.grid().clone();
    let mut engine = SeriesEngine::new(model, &grid, s, flatten(v), terms)?;
    match mesh.rule() {
        QuadratureRule::Trapezoid => engine.run_trapezoid(mesh),
        QuadratureRule::Simpson => engine.run_simpson(mesh),
    }
    let mut total = engine.v0.clone();
    let mut per_term_norms = vec![vnorm];
    for vk in &engine.left[1..] {
        per_term_norms.push(crate::spectral::l2_norm(vk));
        for (a, b) in total.iter_mut().zip(vk) {
            *a += b;
        }
    }
    Ok(SeriesResult {
        state: unflatten(&grid, total),
        terms_used: terms,
        remainder_bound: remainder,
        per_term_norms,
        converged,
    })
}

struct SeriesEngine<'a> {
    twist: Twist<'a>,
    model: &'a DissipationModel,
    s: f64,
    terms: usize,
    v0: Vec<Complex64>,
    /// `V_k` at the current left node, `k = 0..=K` (`left[0]` is `V`).
    left: Vec<Vec<Complex64>>,
    /// `i R V_{k-1}` at the current left node, index `k` (entry 0 unused).
    f_left: Vec<Vec<Complex64>>,
    mid: Vec<Vec<Complex64>>,
    right: Vec<Vec<Complex64>>,
    f_mid: Vec<Complex64>,
    f_right: Vec<Complex64>,
    phase_mid: Vec<Complex64>,
    phase_right: Vec<Complex64>,
}

impl<'a> SeriesEngine<'a> {
    fn new(
        model: &'a DissipationModel,
        grid: &GridSpec,
        s: f64,
        v0: Vec<Complex64>,
        terms: usize,
    ) -> Result<Self> {
        let n = v0.len();
        let zeros = || vec![Complex64::default(); n];
        let mut left: Vec<Vec<Complex64>> = (0..=terms).map(|_| zeros()).collect();
        left[0] = v0.clone();
        Ok(SeriesEngine {
            twist: Twist::new(model, grid)?,
            model,
            s,
            terms,
            v0,
            left,
            f_left: (0..=terms).map(|_| zeros()).collect(),
            mid: (0..=terms).map(|_| zeros()).collect(),
            right: (0..=terms).map(|_| zeros()).collect(),
            f_mid: zeros(),
            f_right: zeros(),
            phase_mid: Vec::new(),
            phase_right: Vec::new(),
        })
    }

    /// `f_left[k] = i R(tau) V_{k-1}(tau)` with `mu` seen from `inside`.
    fn reset_left_slopes(&mut self, tau: f64, inside: f64) {
        let mut p = Vec::new();
        phases(self.twist.grid(), tau - self.s, &mut p);
        let mu = self.model.time().mu_on(tau, inside);
        for k in 1..=self.terms {
            let (o1, o2) = split_mut(&mut self.f_left[k]);
            self.twist.apply(&p, mu, split(&self.left[k - 1]), (o1, o2));
        }
    }

    fn run_trapezoid(&mut self, mesh: &TimeMesh) {
        self.right[0] = self.v0.clone();
        for seg in mesh.segments() {
            self.reset_left_slopes(seg[0], 0.5 * (seg[0] + seg[1]));
            for w in seg.windows(2) {
                let (a, b) = (w[0], w[1]);
                let h = b - a;
                let mu = self.model.time().mu_on(b, 0.5 * (a + b));
                phases(self.twist.grid(), b - self.s, &mut self.phase_right);
                for k in 1..=self.terms {
                    {
                        let (o1, o2) = split_mut(&mut self.f_right);
                        self.twist.apply(&self.phase_right, mu, split(&self.right[k - 1]), (o1, o2));
                    }
                    let half = 0.5 * h;
                    let (l, fl, fr) = (&self.left[k], &self.f_left[k], &self.f_right);
                    for (j, r) in self.right[k].iter_mut().enumerate() {
                        *r = l[j] + (fl[j] + fr[j]) * half;
                    }
                    std::mem::swap(&mut self.f_left[k], &mut self.f_right);
                }
                for k in 1..=self.terms {
                    self.left[k].copy_from_slice(&self.right[k]);
                }
            }
        }
    }

    fn run_simpson(&mut self, mesh: &TimeMesh) {
        self.mid[0] = self.v0.clone();
        self.right[0] = self.v0.clone();
        for seg in mesh.segments() {
            self.reset_left_slopes(seg[0], 0.5 * (seg[0] + seg[1]));
            for pair in seg.windows(3).step_by(2) {
                let (a, m, b) = (pair[0], pair[1], pair[2]);
                let (full, part) = simpson_weights(m - a, b - m);
                let mu_m = self.model.time().mu_on(m, m);
                let mu_b = self.model.time().mu_on(b, m);
                phases(self.twist.grid(), m - self.s, &mut self.phase_mid);
                phases(self.twist.grid(), b - self.s, &mut self.phase_right);
                for k in 1..=self.terms {
                    {
                        let (o1, o2) = split_mut(&mut self.f_mid);
                        self.twist.apply(&self.phase_mid, mu_m, split(&self.mid[k - 1]), (o1, o2));
                    }
                    {
                        let (o1, o2) = split_mut(&mut self.f_right);
                        self.twist.apply(&self.phase_right, mu_b, split(&self.right[k - 1]), (o1, o2));
                    }
                    let (l, fl, fm, fr) = (&self.left[k], &self.f_left[k], &self.f_mid, &self.f_right);
                    for j in 0..l.len() {
                        self.mid[k][j] = l[j] + fl[j] * part[0] + fm[j] * part[1] + fr[j] * part[2];
                        self.right[k][j] = l[j] + fl[j] * full[0] + fm[j] * full[1] + fr[j] * full[2];
                    }
                    std::mem::swap(&mut self.f_left[k], &mut self.f_right);
                }
                for k in 1..=self.terms {
                    self.left[k].copy_from_slice(&self.right[k]);
                }
            }
        }
    }
}

/// Direction of travel through the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Forward,
    Backward,
}

struct Rk4<'a> {
    twist: Twist<'a>,
    model: &'a DissipationModel,
    s: f64,
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
    p0: Vec<Complex64>,
    p_half: Vec<Complex64>,
    p1: Vec<Complex64>,
}

impl<'a> Rk4<'a> {
    fn new(model: &'a DissipationModel, grid: &GridSpec, s: f64) -> Result<Self> {
        let n = 2 * grid.len();
        let z = || vec![Complex64::default(); n];
        Ok(Rk4 {
            twist: Twist::new(model, grid)?,
            model,
            s,
            k: [z(), z(), z(), z()],
            stage: z(),
            p0: Vec::new(),
            p_half: Vec::new(),
            p1: Vec::new(),
        })
    }

    /// One classical RK4 step from `a` to `b` (either orientation).
    fn step(&mut self, w: &mut [Complex64], a: f64, b: f64, fresh_start: bool) {
        let h = b - a;
        let inside = 0.5 * (a + b);
        let grid = self.twist.grid().clone();
        if fresh_start {
            phases(&grid, a - self.s, &mut self.p0);
        }
        phases(&grid, inside - self.s, &mut self.p_half);
        phases(&grid, b - self.s, &mut self.p1);
        let time = self.model.time();
        let (mu0, mu_half, mu1) = (time.mu_on(a, inside), time.mu_on(inside, inside), time.mu_on(b, inside));

        let [k1, k2, k3, k4] = &mut self.k;
        {
            let (o1, o2) = split_mut(k1);
            self.twist.apply(&self.p0, mu0, split(w), (o1, o2));
        }
        for j in 0..w.len() {
            self.stage[j] = w[j] + k1[j] * (0.5 * h);
        }
        {
            let (o1, o2) = split_mut(k2);
            self.twist.apply(&self.p_half, mu_half, split(&self.stage), (o1, o2));
        }
        for j in 0..w.len() {
            self.stage[j] = w[j] + k2[j] * (0.5 * h);
        }
        {
            let (o1, o2) = split_mut(k3);
            self.twist.apply(&self.p_half, mu_half, split(&self.stage), (o1, o2));
        }
        for j in 0..w.len() {
            self.stage[j] = w[j] + k3[j] * h;
        }
        {
            let (o1, o2) = split_mut(k4);
            self.twist.apply(&self.p1, mu1, split(&self.stage), (o1, o2));
        }
        let sixth = h / 6.0;
        for j in 0..w.len() {
            w[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * sixth;
        }
        std::mem::swap(&mut self.p0, &mut self.p1);
    }
}

/// Integrate `dw/dtau = i R(tau, s) w` over the mesh, recording `w` at the
/// requested node indices (in travel order).
fn rk4_sweep(
    v: &StateVector,
    model: &DissipationModel,
    mesh: &TimeMesh,
    sweep: Sweep,
    record: &[usize],
) -> Result<(StateVector, Vec<StateVector>)> {
    check_inputs(v, model, mesh)?;
    let grid = v.grid().clone();
    let mut rk = Rk4::new(model, &grid, mesh.start())?;
    let mut w = flatten(v);
    let nodes = mesh.nodes();
    let mut recorded = Vec::with_capacity(record.len());
    let mut want = record.iter().peekable();
    let mut take = |idx: usize, w: &[Complex64], out: &mut Vec<StateVector>| {
        while want.peek() == Some(&&idx) {
            out.push(unflatten(&grid, w.to_vec()));
            want.next();
        }
    };
    match sweep {
        Sweep::Forward => {
            take(0, &w, &mut recorded);
            for j in 0..nodes.len() - 1 {
                rk.step(&mut w, nodes[j], nodes[j + 1], j == 0);
                take(j + 1, &w, &mut recorded);
            }
        }
        Sweep::Backward => {
            let last = nodes.len() - 1;
            take(last, &w, &mut recorded);
            for j in (0..last).rev() {
                rk.step(&mut w, nodes[j + 1], nodes[j], j + 1 == last);
                take(j, &w, &mut recorded);
            }
        }
    }
    Ok((unflatten(&grid, w), recorded))
}

/// `Q(t, s) v` by RK4 on the ODE.
pub fn q_ode_apply(v: &StateVector, model: &DissipationModel, mesh: &TimeMesh) -> Result<StateVector> {
    if model.time().integral_abs(mesh.start(), mesh.end())? == 0.0 {
        return Ok(v.clone());
    }
    Ok(rk4_sweep(v, model, mesh, Sweep::Forward, &[])?.0)
}

/// `Q(tau, s) v` at each of `times`, which must be mesh nodes in increasing order.
pub fn q_ode_trajectory(
    v: &StateVector,
    model: &DissipationModel,
    mesh: &TimeMesh,
    times: &[f64],
) -> Result<Vec<StateVector>> {
    let idx = times
        .iter()
        .map(|&t| {
            mesh.node_index(t)
                .ok_or_else(|| Error::InvalidMesh(format!("time {t} is not a mesh node")))
        })
        .collect::<Result<Vec<_>>>()?;
    if idx.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("trajectory times must increase".into()));
    }
    Ok(rk4_sweep(v, model, mesh, Sweep::Forward, &idx)?.1)
}

/// `Q(t, s)^{-1} v`: integrate the same ODE from `w(t) = v` back to `s`.
pub fn q_inverse_apply(v: &StateVector, model: &DissipationModel, mesh: &TimeMesh) -> Result<StateVector> {
    if model.time().integral_abs(mesh.start(), mesh.end())? == 0.0 {
        return Ok(v.clone());
    }
    Ok(rk4_sweep(v, model, mesh, Sweep::Backward, &[])?.0)
}

/// `Q(t, s)^* v`. Since `i R` is Hermitian, the adjoint is the inverse flow of
/// the coefficient `-b`.
pub fn q_adjoint_apply(v: &StateVector, model: &DissipationModel, mesh: &TimeMesh) -> Result<StateVector> {
    q_inverse_apply(v, &model.negated(), mesh)
}

/// Full propagator on lifted states, `M E0(t, s) Q(t, s) M^{-1} u`.
pub fn propagate_lifted(
    u: &StateVector,
    model: &DissipationModel,
    mesh: &TimeMesh,
    opts: SeriesOptions,
) -> Result<(StateVector, SeriesResult)> {
    let diag = apply_m(&u.to_spectral(), MDirection::MInverse);
    let series = peano_baker_apply(&diag, model, mesh, opts)?;
    let moved = apply_e0(mesh.end(), mesh.start(), &series.state)?;
    Ok((apply_m(&moved, MDirection::M), series))
}

/// `(u(t), D_t u(t))` from `(u(s), D_t u(s))` for the damped equation.
pub fn propagate_physical(
    data: (&Field, &Field),
    model: &DissipationModel,
    mesh: &TimeMesh,
    opts: SeriesOptions,
) -> Result<(Field, Field)> {
    let lifted = lift_data(data.0, data.1)?;
    let (out, _) = propagate_lifted(&lifted, model, mesh, opts)?;
    Ok(restore_data(&out))
}

/// Same as [`propagate_lifted`] with `Q` from the ODE integrator.
pub fn propagate_lifted_ode(u: &StateVector, model: &DissipationModel, mesh: &TimeMesh) -> Result<StateVector> {
    let diag = apply_m(&u.to_spectral(), MDirection::MInverse);
    let q = q_ode_apply(&diag, model, mesh)?;
    let moved = apply_e0(mesh.end(), mesh.start(), &q)?;
    Ok(apply_m(&moved, MDirection::M))
}
