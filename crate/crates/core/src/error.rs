use thiserror::Error;

/// Which tracking feasibility condition was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `|X| < 1 - ε1`: the requested current exceeds what the hopping can carry.
    Feasibility,
    /// `R > ε2`: the hopping expectation has collapsed and its phase is undefined.
    HoppingFloor,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Feasibility => write!(f, "|X| < 1 - eps1"),
            Constraint::HoppingFloor => write!(f, "R > eps2"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("tracking constraint {constraint} violated at t = {time:.6} (value {value:.6e}, margin {margin:.3e})")]
    ConstraintViolation {
        constraint: Constraint,
        time: f64,
        value: f64,
        margin: f64,
    },

    #[error(
        "target J_T(0) = {target:.3e} inconsistent with initial current {initial:.3e} (tolerance {tolerance:.1e})"
    )]
    InitialInconsistency { target: f64, initial: f64, tolerance: f64 },

    #[error("norm drifted to {norm:.12} at t = {time:.6}")]
    NormDrift { time: f64, norm: f64 },

    #[error("Lanczos did not converge: residual {residual:.3e} after {restarts} restarts")]
    NotConverged { residual: f64, restarts: usize },

    #[error("signal error: {0}")]
    Signal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
