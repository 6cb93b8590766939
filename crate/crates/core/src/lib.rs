//! Damped wave equations on the torus: propagators, wave operators and
//! scattering for time-dependent dissipation.

pub mod coefficients;
pub mod dyson;
pub mod error;
pub mod free;
pub mod harness;
pub mod mesh;
pub mod modes;
pub mod par;
pub mod quadrature;
pub mod reference;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
