//! Exact reduction to one Fourier mode for `x`-independent coefficients.
//!
//! With `b = mu(t)` every frequency `omega = |xi|` decouples and `Q(t, s)`
//! becomes a 2x2 matrix solving `d/dtau Q = i R(tau, s; omega) Q`, where
//! `R = E0(s, tau) B(tau) E0(tau, s)` is built here from the 2x2 factors.
//! Integration uses fixed steps of the 3/8-rule fourth-order Runge-Kutta
//! method, cut at the profile's breakpoints.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::coefficients::DissipationModel;
use crate::error::{Error, Result};
use crate::free::{DiagonalizerM, MDirection};

/// Default horizon cap when choosing the wave-operator truncation time.
pub const HORIZON_CAP: f64 = 1024.0;

pub type Mat2 = Matrix2<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatrix {
    pub matrix: Mat2,
    pub omega: f64,
    /// `(s, t)`; for wave operators `(0, +-T)`.
    pub interval: (f64, f64),
}

impl ModeMatrix {
    pub fn det(&self) -> Complex64 {
        self.matrix.determinant()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn inverse(&self) -> Option<ModeMatrix> {
        self.matrix.try_inverse().map(|matrix| ModeMatrix { matrix, ..self.clone() })
    }
}

fn real_matrix(m: [[f64; 2]; 2]) -> Mat2 {
    Mat2::new(
        Complex64::new(m[0][0], 0.0),
        Complex64::new(m[0][1], 0.0),
        Complex64::new(m[1][0], 0.0),
        Complex64::new(m[1][1], 0.0),
    )
}

/// `M X M^{-1}`.
pub fn conjugate_by_m(x: &Mat2) -> Mat2 {
    real_matrix(DiagonalizerM::matrix(MDirection::M)) * x * real_matrix(DiagonalizerM::matrix(MDirection::MInverse))
}

/// `E0(t, s)` restricted to frequency `omega`.
pub fn mode_e0(omega: f64, t: f64, s: f64) -> Mat2 {
    let p = Complex64::cis((t - s) * omega);
    Mat2::new(p, Complex64::default(), Complex64::default(), p.conj())
}

/// `i R(tau, s; omega)` for coefficient value `mu`.
fn generator(omega: f64, tau: f64, s: f64, mu: f64) -> Mat2 {
    let b = Mat2::from_element(Complex64::new(0.0, 0.5 * mu));
    (mode_e0(omega, s, tau) * b * mode_e0(omega, tau, s)) * Complex64::i()
}

/// Default step `1e-3 * min(1, 1 / max(omega, 1))`.
pub fn default_fine_dt(omega: f64) -> f64 {
    1e-3 * (1.0 / omega.max(1.0)).min(1.0)
}

/// `Q(t, s)` at frequency `omega`. `t < s` integrates backwards.
pub fn mode_q(omega: f64, s: f64, t: f64, model: &DissipationModel, fine_dt: Option<f64>) -> Result<ModeMatrix> {
    if !model.is_x_independent() {
        return Err(Error::XDependentModel);
    }
    if !(omega >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("mode_q needs omega >= 0 and finite times, got {omega}, [{s}, {t}]")));
    }
    let dt = fine_dt.unwrap_or_else(|| default_fine_dt(omega));
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    let (lo, hi) = (s.min(t), s.max(t));
    let time = model.time();
    time.check_span(lo, hi)?;
    let mut q = Mat2::identity();
    if s == t {
        return Ok(ModeMatrix { matrix: q, omega, interval: (s, t) });
    }
    let mut cuts: Vec<f64> = time.breakpoints().into_iter().filter(|&x| x > lo && x < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if t < s {
        cuts.reverse();
    }
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inside = 0.5 * (a + b);
        if time.integral_abs(a.min(b), a.max(b))? == 0.0 {
            continue;
        }
        let steps = ((b - a).abs() / dt).ceil().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        let f = |tau: f64| generator(omega, tau, s, time.mu_on(tau, inside));
        for j in 0..steps {
            let tau = a + h * j as f64;
            // 3/8 rule
            let k1 = f(tau) * q;
            let k2 = f(tau + h / 3.0) * (q + k1 * Complex64::from(h / 3.0));
            let k3 = f(tau + 2.0 * h / 3.0) * (q + (k2 - k1 / Complex64::from(3.0)) * Complex64::from(h));
            let k4 = f(tau + h) * (q + (k1 - k2 + k3) * Complex64::from(h));
            q += (k1 + (k2 + k3) * Complex64::from(3.0) + k4) * Complex64::from(h / 8.0);
        }
    }
    Ok(ModeMatrix { matrix: q, omega, interval: (s, t) })
}

/// Horizon for the forward (`+1`) or backward (`-1`) wave operator.
pub fn horizon_for(model: &DissipationModel, backward: bool, tail_tol: f64) -> Result<f64> {
    if backward {
        model.time_reversed().horizon(tail_tol, HORIZON_CAP)
    } else {
        model.horizon(tail_tol, HORIZON_CAP)
    }
}

/// `W_+(omega) = M Q(T, 0) M^{-1}` with the certified horizon `T`.
pub fn mode_wave_operator(omega: f64, model: &DissipationModel, tail_tol: f64, fine_dt: Option<f64>) -> Result<ModeMatrix> {
    let horizon = horizon_for(model, false, tail_tol)?;
    mode_wave_operator_at(omega, model, horizon, fine_dt)
}

/// `M Q(T, 0) M^{-1}` at an explicit (signed) horizon.
pub fn mode_wave_operator_at(omega: f64, model: &DissipationModel, horizon: f64, fine_dt: Option<f64>) -> Result<ModeMatrix> {
    let q = mode_q(omega, 0.0, horizon, model, fine_dt)?;
    Ok(ModeMatrix { matrix: conjugate_by_m(&q.matrix), ..q })
}

/// `W_-(omega) = M Q(-T, 0) M^{-1}`, integrated backwards in time.
pub fn mode_wave_operator_minus(omega: f64, model: &DissipationModel, tail_tol: f64, fine_dt: Option<f64>) -> Result<ModeMatrix> {
    let horizon = horizon_for(model, true, tail_tol)?;
    mode_wave_operator_at(omega, model, -horizon, fine_dt)
}

/// `S(omega) = W_+(omega) W_-(omega)^{-1}`.
pub fn mode_scattering(omega: f64, model: &DissipationModel, tail_tol: f64, fine_dt: Option<f64>) -> Result<ModeMatrix> {
    let plus = mode_wave_operator(omega, model, tail_tol, fine_dt)?;
    let minus = mode_wave_operator_minus(omega, model, tail_tol, fine_dt)?;
    let inv = minus
        .matrix
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument(format!("W_- singular at omega = {omega}")))?;
    Ok(ModeMatrix {
        matrix: plus.matrix * inv,
        omega,
        interval: (minus.interval.1, plus.interval.1),
    })
}
