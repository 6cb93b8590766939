//! Seeded random test states.
//!
//! Lifted states are drawn in Fourier space with amplitude `min(1, |xi|^-2)`
//! and independent uniform phases; the zero mode is left empty. The same seed
//! always gives the same state on the same grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{restore_data, Field, GridSpec, StateVector};

fn component(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    grid.abs_xi()
        .iter()
        .map(|&xi| {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            if xi == 0.0 {
                Complex64::default()
            } else {
                Complex64::from_polar((1.0 / (xi * xi)).min(1.0), phase)
            }
        })
        .collect()
}

pub fn random_state(grid: &GridSpec, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = component(grid, &mut rng);
    let second = component(grid, &mut rng);
    StateVector::from_spectral(grid, first, second).expect("lengths match grid")
}

/// `count` independent states derived from `seed`.
pub fn random_states(grid: &GridSpec, seed: u64, count: usize) -> Vec<StateVector> {
    (0..count as u64)
        .map(|j| random_state(grid, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(j)))
        .collect()
}

/// Physical data `(u1, u2)` whose lift is [`random_state`].
pub fn random_data(grid: &GridSpec, seed: u64) -> (Field, Field) {
    restore_data(&random_state(grid, seed))
}
