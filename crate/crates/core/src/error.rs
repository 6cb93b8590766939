use thiserror::Error;

use crate::spectral::Representation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("representation mismatch: expected {expected:?}, found {found:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid profile `{spec}`: {reason}")]
    InvalidProfile { spec: String, reason: String },

    #[error("time {t} lies outside the tabulated range [{start}, {end}]")]
    OutsideTable { t: f64, start: f64, end: f64 },

    #[error("profile has no integrable closed-form tail; infinite endpoint not supported")]
    InfiniteEndpoint,

    #[error("interval endpoints out of order: s = {s}, t = {t}")]
    ReversedInterval { s: f64, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid time mesh: {0}")]
    InvalidMesh(String),

    #[error("step {dt} does not divide the interval [{t0}, {t1}]")]
    NonDivisibleStep { t0: f64, t1: f64, dt: f64 },

    #[error("horizon cap {cap} reached before tail bound fell below {tol}")]
    HorizonCapExceeded { cap: f64, tol: f64 },

    #[error("the per-mode reduction requires an x-independent coefficient")]
    XDependentModel,

    #[error("operator `{0}` has no adjoint action; power iteration unavailable")]
    MissingAdjoint(String),

    #[error("dense assembly limited to grids of at most {limit} points, got {size}")]
    DenseTooLarge { size: usize, limit: usize },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
