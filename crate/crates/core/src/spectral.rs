//! Periodic spectral grid, unitary discrete Fourier transform, the `|D|`
//! multiplier and the lift between wave data `(u1, u2)` and the first-order
//! state `U = (|D| u1, u2)`.
//!
//! Everything lives on the torus `(0, L]^n` sampled with `N` points per axis.
//! Both transform directions carry the factor `1/sqrt(N^n)`, so the discrete
//! `l2` norm is the same in either representation and the energy norm of wave
//! data is simply the `l2` norm of its lifted state.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Which picture a [`Field`] holds its values in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Power of the Fourier multiplier `|D| = sqrt(-Laplacian)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsDPower {
    Plus,
    Minus,
}

struct GridTables {
    abs_xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid with its frequency table and cached FFT plans.
///
/// Cloning is cheap; equality compares `(dim, points, period)` only.
#[derive(Clone)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    period: f64,
    tables: Arc<GridTables>,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.tables, &other.tables)
            || (self.dim == other.dim
                && self.points == other.points
                && self.period == other.period)
    }
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 2"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let len = points.pow(dim as u32);
        let step = 2.0 * PI / period;
        let mut abs_xi = Vec::with_capacity(len);
        for index in 0..len {
            let k = wavenumber_of(index, dim, points);
            let sq: f64 = k[..dim].iter().map(|&k| (k as f64 * step).powi(2)).sum();
            abs_xi.push(sq.sqrt());
        }
        Ok(GridSpec {
            dim,
            points,
            period,
            tables: Arc::new(GridTables {
                abs_xi,
                forward,
                inverse,
            }),
        })
    }

    /// `1d:256`-style shorthand with period `2*pi`.
    pub fn periodic_2pi(dim: usize, points: usize) -> Result<Self> {
        Self::new(dim, points, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of grid points `N^n`.
    pub fn len(&self) -> usize {
        self.tables.abs_xi.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|xi|` for every mode, in storage order.
    pub fn abs_xi(&self) -> &[f64] {
        &self.tables.abs_xi
    }

    pub fn max_abs_xi(&self) -> f64 {
        self.abs_xi().iter().copied().fold(0.0, f64::max)
    }

    /// Signed integer wavenumbers of a storage index (unused axes are zero).
    pub fn wavenumber(&self, index: usize) -> [i64; 3] {
        wavenumber_of(index, self.dim, self.points)
    }

    /// Storage index of a signed wavenumber, taken modulo `N` per axis.
    pub fn mode_index(&self, k: &[i64]) -> usize {
        let n = self.points as i64;
        k.iter()
            .take(self.dim)
            .fold(0usize, |acc, &k| acc * self.points + k.rem_euclid(n) as usize)
    }

    /// Physical coordinates of a storage index.
    pub fn coordinates(&self, index: usize) -> [f64; 3] {
        let h = self.period / self.points as f64;
        let mut out = [0.0; 3];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            out[axis] = (rest % self.points) as f64 * h;
            rest /= self.points;
        }
        out
    }

    pub(crate) fn fft_in_place(&self, data: &mut [Complex64], direction: Direction) {
        let plan = match direction {
            Direction::Forward => &self.tables.forward,
            Direction::Inverse => &self.tables.inverse,
        };
        let n = self.points;
        let total = data.len();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        data[base + j * stride] = *value;
                    }
                }
            }
        }
        let scale = 1.0 / (total as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

fn wavenumber_of(index: usize, dim: usize, points: usize) -> [i64; 3] {
    let mut k = [0i64; 3];
    let mut rest = index;
    let half = points / 2;
    for axis in (0..dim).rev() {
        let j = rest % points;
        rest /= points;
        k[axis] = if j < half { j as i64 } else { j as i64 - points as i64 };
    }
    k
}

/// Complex grid function in either representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    repr: Representation,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &GridSpec, repr: Representation) -> Self {
        Field {
            grid: grid.clone(),
            repr,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_values(
        grid: &GridSpec,
        repr: Representation,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field {
            grid: grid.clone(),
            repr,
            values,
        })
    }

    pub fn constant(grid: &GridSpec, value: Complex64) -> Self {
        Field {
            grid: grid.clone(),
            repr: Representation::Physical,
            values: vec![value; grid.len()],
        }
    }

    /// Physical-space samples of `f(x)`.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| f(&grid.coordinates(i)[..dim]))
            .collect();
        Field {
            grid: grid.clone(),
            repr: Representation::Physical,
            values,
        }
    }

    /// Physical samples of `exp(i xi.x)` for the signed wavenumber `k`.
    pub fn pure_mode(grid: &GridSpec, k: &[i64]) -> Self {
        let step = 2.0 * PI / grid.period();
        Self::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(k).map(|(x, &k)| k as f64 * step * x).sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn repr(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Discrete `l2` norm; the summation order is fixed.
    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn transform(&self, direction: Direction) -> Result<Field> {
        self.clone().into_transformed(direction)
    }

    pub fn into_transformed(mut self, direction: Direction) -> Result<Field> {
        let (source, target) = match direction {
            Direction::Forward => (Representation::Physical, Representation::Spectral),
            Direction::Inverse => (Representation::Spectral, Representation::Physical),
        };
        if self.repr != source {
            return Err(Error::RepresentationMismatch {
                expected: source,
                found: self.repr,
            });
        }
        let grid = self.grid.clone();
        grid.fft_in_place(&mut self.values, direction);
        self.repr = target;
        Ok(self)
    }

    pub fn into_repr(self, repr: Representation) -> Field {
        match (self.repr, repr) {
            (a, b) if a == b => self,
            (Representation::Physical, _) => self
                .into_transformed(Direction::Forward)
                .expect("source tag checked"),
            (Representation::Spectral, _) => self
                .into_transformed(Direction::Inverse)
                .expect("source tag checked"),
        }
    }

    pub fn to_spectral(&self) -> Field {
        self.clone().into_repr(Representation::Spectral)
    }

    pub fn to_physical(&self) -> Field {
        self.clone().into_repr(Representation::Physical)
    }

    pub fn scaled(&self, a: Complex64) -> Field {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    fn check_compatible(&self, other: &Field) {
        assert!(self.grid == other.grid, "fields live on different grids");
        assert_eq!(self.repr, other.repr, "fields in different representations");
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.check_compatible(rhs);
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&rhs.values)
            .for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.check_compatible(rhs);
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&rhs.values)
            .for_each(|(a, b)| *a -= b);
        out
    }
}

pub(crate) fn l2_norm(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Two-component state `U = (U1, U2)` on a common grid and representation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    first: Field,
    second: Field,
}

impl StateVector {
    pub fn new(first: Field, second: Field) -> Result<Self> {
        if first.grid != second.grid {
            return Err(Error::GridMismatch);
        }
        if first.repr != second.repr {
            return Err(Error::RepresentationMismatch {
                expected: first.repr,
                found: second.repr,
            });
        }
        Ok(StateVector { first, second })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        StateVector {
            first: Field::zeros(grid, Representation::Spectral),
            second: Field::zeros(grid, Representation::Spectral),
        }
    }

    /// Spectral state with the given mode values for both components.
    pub fn from_spectral(
        grid: &GridSpec,
        first: Vec<Complex64>,
        second: Vec<Complex64>,
    ) -> Result<Self> {
        Self::new(
            Field::from_values(grid, Representation::Spectral, first)?,
            Field::from_values(grid, Representation::Spectral, second)?,
        )
    }

    /// Basis vector with a single unit entry at flat position `j` of the
    /// concatenated `(U1, U2)` spectral coefficients.
    pub fn basis(grid: &GridSpec, j: usize) -> Self {
        let mut out = Self::zeros(grid);
        let len = grid.len();
        if j < len {
            out.first.values[j] = Complex64::new(1.0, 0.0);
        } else {
            out.second.values[j - len] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn first(&self) -> &Field {
        &self.first
    }

    pub fn second(&self) -> &Field {
        &self.second
    }

    pub fn grid(&self) -> &GridSpec {
        &self.first.grid
    }

    pub fn repr(&self) -> Representation {
        self.first.repr
    }

    pub fn into_parts(self) -> (Field, Field) {
        (self.first, self.second)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Complex64], &mut [Complex64]) {
        (&mut self.first.values, &mut self.second.values)
    }

    pub(crate) fn parts(&self) -> (&[Complex64], &[Complex64]) {
        (&self.first.values, &self.second.values)
    }

    pub fn into_repr(self, repr: Representation) -> StateVector {
        StateVector {
            first: self.first.into_repr(repr),
            second: self.second.into_repr(repr),
        }
    }

    pub fn to_spectral(&self) -> StateVector {
        self.clone().into_repr(Representation::Spectral)
    }

    pub(crate) fn require_spectral(&self) -> Result<()> {
        if self.repr() != Representation::Spectral {
            return Err(Error::RepresentationMismatch {
                expected: Representation::Spectral,
                found: self.repr(),
            });
        }
        Ok(())
    }

    /// Swap the two components.
    pub fn swapped(&self) -> StateVector {
        StateVector {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        energy_norm(self)
    }

    /// Flattened `(U1, U2)` coefficients.
    pub fn to_vec(&self) -> Vec<Complex64> {
        let mut out = self.first.values.clone();
        out.extend_from_slice(&self.second.values);
        out
    }

    /// Inner product `<self, other>` conjugate-linear in `self`.
    pub fn dot(&self, other: &StateVector) -> Complex64 {
        let a = self.to_vec();
        let b = other.to_vec();
        a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum()
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &StateVector) {
        self.first.check_compatible(&other.first);
        for (x, y) in self.first.values.iter_mut().zip(&other.first.values) {
            *x += a * y;
        }
        for (x, y) in self.second.values.iter_mut().zip(&other.second.values) {
            *x += a * y;
        }
    }

    /// Largest absolute coefficient difference, both components.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.first.check_compatible(&other.first);
        self.first
            .values
            .iter()
            .zip(&other.first.values)
            .chain(self.second.values.iter().zip(&other.second.values))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector {
            first: &self.first + &rhs.first,
            second: &self.second + &rhs.second,
        }
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector {
            first: &self.first - &rhs.first,
            second: &self.second - &rhs.second,
        }
    }
}

impl Mul<&StateVector> for Complex64 {
    type Output = StateVector;
    fn mul(self, rhs: &StateVector) -> StateVector {
        StateVector {
            first: rhs.first.scaled(self),
            second: rhs.second.scaled(self),
        }
    }
}

impl Mul<&StateVector> for f64 {
    type Output = StateVector;
    fn mul(self, rhs: &StateVector) -> StateVector {
        Complex64::new(self, 0.0) * rhs
    }
}

pub fn transform(f: &Field, direction: Direction) -> Result<Field> {
    f.transform(direction)
}

/// Spectral multiplication by `|xi|^{+1}` or `|xi|^{-1}`; the zero mode is
/// annihilated for both powers. The result keeps the input representation.
pub fn apply_abs_d(f: &Field, power: AbsDPower) -> Field {
    let repr = f.repr();
    let mut spec = f.to_spectral();
    let grid = spec.grid.clone();
    for (v, &xi) in spec.values.iter_mut().zip(grid.abs_xi()) {
        *v = if xi == 0.0 {
            Complex64::default()
        } else {
            match power {
                AbsDPower::Plus => *v * xi,
                AbsDPower::Minus => *v / xi,
            }
        };
    }
    spec.into_repr(repr)
}

/// `U = (|D| u1, u2)` in spectral representation; the mean of `u1` is dropped.
pub fn lift_data(u1: &Field, u2: &Field) -> Result<StateVector> {
    if u1.grid != u2.grid {
        return Err(Error::GridMismatch);
    }
    let first = apply_abs_d(&u1.to_spectral(), AbsDPower::Plus);
    StateVector::new(first, u2.to_spectral())
}

/// Inverse of [`lift_data`]: `(|D|^{-1} U1, U2)` in physical representation.
pub fn restore_data(u: &StateVector) -> (Field, Field) {
    let u1 = apply_abs_d(&u.first.to_spectral(), AbsDPower::Minus).into_repr(Representation::Physical);
    let u2 = u.second.to_physical();
    (u1, u2)
}

/// `(||U1||^2 + ||U2||^2)^{1/2}`; equals the energy norm of the wave data.
pub fn energy_norm(u: &StateVector) -> f64 {
    let a = u.first.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let b = u.second.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    (a + b).sqrt()
}

/// Energy norm of physical wave data `(u, D_t u)`.
pub fn data_energy_norm(u1: &Field, u2: &Field) -> Result<f64> {
    Ok(energy_norm(&lift_data(u1, u2)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_has_single_zero_mode_and_symmetric_table() {
        for (dim, n) in [(1, 16), (2, 8), (3, 4)] {
            let grid = GridSpec::periodic_2pi(dim, n).unwrap();
            assert_eq!(grid.len(), n.pow(dim as u32));
            let zeros = grid.abs_xi().iter().filter(|&&x| x == 0.0).count();
            assert_eq!(zeros, 1);
            for i in 0..grid.len() {
                let k = grid.wavenumber(i);
                let neg: Vec<i64> = k.iter().map(|k| -k).collect();
                let j = grid.mode_index(&neg[..dim]);
                assert_eq!(grid.abs_xi()[i], grid.abs_xi()[j]);
                assert!(grid.abs_xi()[i] >= 0.0);
            }
        }
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(GridSpec::new(4, 8, 1.0).is_err());
        assert!(GridSpec::new(1, 12, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 0.0).is_err());
    }

    #[test]
    fn constant_field_goes_to_zero_mode() {
        let grid = GridSpec::periodic_2pi(2, 8).unwrap();
        let f = Field::constant(&grid, c(1.5));
        let spec = f.transform(Direction::Forward).unwrap();
        assert!((spec.values()[0].re - 1.5 * 8.0).abs() < 1e-12);
        for v in &spec.values()[1..] {
            assert!(v.norm() < 1e-12);
        }
        assert!((spec.norm() - f.norm()).abs() < 1e-12 * f.norm());
    }

    #[test]
    fn pure_mode_is_an_indicator() {
        let grid = GridSpec::periodic_2pi(1, 32).unwrap();
        let f = Field::pure_mode(&grid, &[5]);
        let spec = f.transform(Direction::Forward).unwrap();
        let idx = grid.mode_index(&[5]);
        for (i, v) in spec.values().iter().enumerate() {
            let expected = if i == idx { (32f64).sqrt() } else { 0.0 };
            assert!((v - c(expected)).norm() < 1e-12, "mode {i}: {v}");
        }
    }

    #[test]
    fn transform_checks_tag() {
        let grid = GridSpec::periodic_2pi(1, 8).unwrap();
        let f = Field::zeros(&grid, Representation::Spectral);
        assert!(matches!(
            f.transform(Direction::Forward),
            Err(Error::RepresentationMismatch { .. })
        ));
    }

    #[test]
    fn abs_d_scales_pure_mode_and_kills_constants() {
        let grid = GridSpec::new(1, 16, 3.0).unwrap();
        let f = Field::pure_mode(&grid, &[1]);
        let g = apply_abs_d(&f, AbsDPower::Plus);
        let scale = 2.0 * PI / 3.0;
        for (a, b) in g.values().iter().zip(f.values()) {
            assert!((a - b * scale).norm() < 1e-12);
        }
        let k = Field::constant(&grid, c(2.0));
        assert!(apply_abs_d(&k, AbsDPower::Plus).norm() < 1e-12);
    }

    #[test]
    fn lift_of_unit_frequency_mode() {
        let grid = GridSpec::periodic_2pi(1, 16).unwrap();
        let a = Complex64::new(0.3, -0.7);
        let u1 = Field::pure_mode(&grid, &[1]).scaled(a);
        let u2 = Field::zeros(&grid, Representation::Physical);
        let lifted = lift_data(&u1, &u2).unwrap();
        let expected = u1.to_spectral();
        for (x, y) in lifted.first().values().iter().zip(expected.values()) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(lifted.second().norm() < 1e-14);
    }

    #[test]
    fn lift_with_zero_displacement() {
        let grid = GridSpec::periodic_2pi(1, 16).unwrap();
        let g = Field::from_fn(&grid, |x| Complex64::new(x[0].sin(), x[0].cos()));
        let u1 = Field::zeros(&grid, Representation::Physical);
        let lifted = lift_data(&u1, &g).unwrap();
        assert!(lifted.first().norm() < 1e-14);
        assert!((&lifted.second().to_physical() - &g).norm() < 1e-12);
    }

    #[test]
    fn lift_restore_projects_mean() {
        let grid = GridSpec::periodic_2pi(1, 32).unwrap();
        let u1 = Field::from_fn(&grid, |x| c(1.0 + (2.0 * x[0]).cos()));
        let u2 = Field::from_fn(&grid, |x| c(x[0].sin()));
        let (r1, r2) = restore_data(&lift_data(&u1, &u2).unwrap());
        let mean_free = Field::from_fn(&grid, |x| c((2.0 * x[0]).cos()));
        assert!((&r1 - &mean_free).norm() < 1e-12);
        assert!((&r2 - &u2).norm() < 1e-12);
    }

    #[test]
    fn lift_rejects_grid_mismatch() {
        let a = GridSpec::periodic_2pi(1, 16).unwrap();
        let b = GridSpec::periodic_2pi(1, 32).unwrap();
        let r = lift_data(
            &Field::zeros(&a, Representation::Physical),
            &Field::zeros(&b, Representation::Physical),
        );
        assert_eq!(r.unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn energy_norm_examples() {
        let grid = GridSpec::periodic_2pi(1, 4).unwrap();
        assert_eq!(energy_norm(&StateVector::zeros(&grid)), 0.0);
        let mut f = vec![Complex64::default(); 4];
        f[1] = c(3.0);
        let mut g = vec![Complex64::default(); 4];
        g[2] = c(4.0);
        let u = StateVector::from_spectral(&grid, f.clone(), vec![Complex64::default(); 4]).unwrap();
        assert_eq!(energy_norm(&u), 3.0);
        let u = StateVector::from_spectral(&grid, f, g).unwrap();
        assert_eq!(energy_norm(&u), 5.0);
    }
}
