//! Exact building blocks: the diagonalizer `M`, the free group
//! `E0(t, s) = exp(i (t - s) diag(|D|, -|D|))`, the coupling `B(t, x)`, the
//! twisted perturbation `R(t, s) = E0(s, t) B(t) E0(t, s)` and the free wave
//! group `U0(t)` on physical data.
//!
//! In the diagonal variables `B(t, x) = (i b(t, x) / 2) [[1, 1], [1, 1]]`, so
//! both output components of `B U` equal `(i b / 2)(U1 + U2)`. Only that sum
//! needs a round trip to physical space.

use num_complex::Complex64;

use crate::coefficients::DissipationModel;
use crate::error::Result;
use crate::spectral::{lift_data, restore_data, Direction, Field, GridSpec, Representation, StateVector};

/// Which of the constant matrices `M`, `M^{-1}` to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MDirection {
    M,
    MInverse,
}

pub struct DiagonalizerM;

impl DiagonalizerM {
    pub const M: [[f64; 2]; 2] = [[1.0, -1.0], [1.0, 1.0]];
    pub const M_INVERSE: [[f64; 2]; 2] = [[0.5, 0.5], [-0.5, 0.5]];

    pub fn matrix(direction: MDirection) -> [[f64; 2]; 2] {
        match direction {
            MDirection::M => Self::M,
            MDirection::MInverse => Self::M_INVERSE,
        }
    }
}

pub fn apply_m(u: &StateVector, direction: MDirection) -> StateVector {
    let m = DiagonalizerM::matrix(direction);
    let mut out = u.clone();
    let (a, b) = u.parts();
    let (x, y) = out.parts_mut();
    for k in 0..a.len() {
        x[k] = a[k] * m[0][0] + b[k] * m[0][1];
        y[k] = a[k] * m[1][0] + b[k] * m[1][1];
    }
    out
}

/// `e^{i tau |xi|}` for every mode.
pub(crate) fn phases(grid: &GridSpec, tau: f64, out: &mut Vec<Complex64>) {
    out.clear();
    out.extend(grid.abs_xi().iter().map(|&xi| Complex64::cis(tau * xi)));
}

pub fn apply_e0(t: f64, s: f64, u: &StateVector) -> Result<StateVector> {
    u.require_spectral()?;
    let mut p = Vec::new();
    phases(u.grid(), t - s, &mut p);
    let mut out = u.clone();
    let (a, b) = out.parts_mut();
    for k in 0..p.len() {
        a[k] *= p[k];
        b[k] *= p[k].conj();
    }
    Ok(out)
}

/// `B(t, x) U` in closed form; keeps the input representation.
pub fn apply_b(t: f64, u: &StateVector, model: &DissipationModel) -> Result<StateVector> {
    model.check_grid(u.grid())?;
    let grid = u.grid().clone();
    let repr = u.repr();
    let (a, b) = u.parts();
    let mut sum: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let half_i = Complex64::new(0.0, 0.5 * model.time().mu(t));
    match model.beta() {
        None => sum.iter_mut().for_each(|v| *v *= half_i),
        Some(beta) => {
            if repr == Representation::Spectral {
                grid.fft_in_place(&mut sum, Direction::Inverse);
            }
            for (v, &bx) in sum.iter_mut().zip(beta) {
                *v *= half_i * bx;
            }
            if repr == Representation::Spectral {
                grid.fft_in_place(&mut sum, Direction::Forward);
            }
        }
    }
    StateVector::new(
        Field::from_values(&grid, repr, sum.clone())?,
        Field::from_values(&grid, repr, sum)?,
    )
}

/// `M^{-1} diag(0, i b) M U`, the defining composition of `B`.
pub fn apply_b_compositional(
    t: f64,
    u: &StateVector,
    model: &DissipationModel,
) -> Result<StateVector> {
    let repr = u.repr();
    let mu = apply_m(u, MDirection::M);
    let b = model.eval_b(t, u.grid())?;
    let (first, second) = mu.into_parts();
    let mut second = second.into_repr(Representation::Physical);
    for (v, bx) in second.values_mut().iter_mut().zip(b.values()) {
        *v *= Complex64::i() * bx;
    }
    let first = Field::zeros(first.grid(), Representation::Physical);
    let coupled = StateVector::new(first.into_repr(repr), second.into_repr(repr))?;
    Ok(apply_m(&coupled, MDirection::MInverse))
}

pub fn apply_r(t: f64, s: f64, u: &StateVector, model: &DissipationModel) -> Result<StateVector> {
    let forward = apply_e0(t, s, u)?;
    let coupled = apply_b(t, &forward, model)?;
    apply_e0(s, t, &coupled)
}

/// Free wave group on physical data `(u, D_t u)`:
/// `restore . M . E0(t, 0) . M^{-1} . lift`.
pub fn apply_u0(t: f64, data: (&Field, &Field)) -> Result<(Field, Field)> {
    let lifted = lift_data(data.0, data.1)?;
    let diag = apply_m(&lifted, MDirection::MInverse);
    let moved = apply_e0(t, 0.0, &diag)?;
    Ok(restore_data(&apply_m(&moved, MDirection::M)))
}

/// Free group on lifted states, `M E0(t, s) M^{-1}`.
pub fn apply_free_lifted(t: f64, s: f64, u: &StateVector) -> Result<StateVector> {
    let diag = apply_m(u, MDirection::MInverse);
    Ok(apply_m(&apply_e0(t, s, &diag)?, MDirection::M))
}

/// Inner-loop evaluator of `i R(tau, s)` on spectral states.
///
/// Callers pass the phase table `e^{i (tau - s)|xi|}` and the coefficient
/// value `mu`, which lets integrators reuse phases across series orders and
/// take one-sided values of `mu` at breakpoints.
pub(crate) struct Twist<'a> {
    model: &'a DissipationModel,
    grid: GridSpec,
    sum: Vec<Complex64>,
}

impl<'a> Twist<'a> {
    pub(crate) fn new(model: &'a DissipationModel, grid: &GridSpec) -> Result<Self> {
        model.check_grid(grid)?;
        Ok(Twist {
            model,
            grid: grid.clone(),
            sum: vec![Complex64::default(); grid.len()],
        })
    }

    pub(crate) fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `out = i R(tau, s) v` with `phase = e^{i (tau - s)|xi|}`.
    pub(crate) fn apply(
        &mut self,
        phase: &[Complex64],
        mu: f64,
        v: (&[Complex64], &[Complex64]),
        out: (&mut [Complex64], &mut [Complex64]),
    ) {
        let (v1, v2) = v;
        let (o1, o2) = out;
        if mu == 0.0 {
            o1.iter_mut().for_each(|x| *x = Complex64::default());
            o2.iter_mut().for_each(|x| *x = Complex64::default());
            return;
        }
        for k in 0..phase.len() {
            self.sum[k] = phase[k] * v1[k] + phase[k].conj() * v2[k];
        }
        // i * (i mu / 2) = -mu / 2
        let factor = -0.5 * mu;
        match self.model.beta() {
            None => self.sum.iter_mut().for_each(|x| *x *= factor),
            Some(beta) => {
                self.grid.fft_in_place(&mut self.sum, Direction::Inverse);
                for (x, &bx) in self.sum.iter_mut().zip(beta) {
                    *x *= factor * bx;
                }
                self.grid.fft_in_place(&mut self.sum, Direction::Forward);
            }
        }
        for k in 0..phase.len() {
            o1[k] = phase[k].conj() * self.sum[k];
            o2[k] = phase[k] * self.sum[k];
        }
    }
}
