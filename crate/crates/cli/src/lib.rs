//! Configuration-driven experiment runner for tracking control of the driven
//! Hubbard chain.

pub mod check;
pub mod config;
pub mod output;
pub mod scenarios;

use hubbard_tracking::Error;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output error: {0}")]
    Output(String),

    #[error("invariant check failed")]
    CheckFailed,
}

impl AppError {
    /// 2 constraint violation, 3 non-convergence, 4 config error, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 4,
            AppError::Model(e) => match e {
                Error::ConstraintViolation { .. } | Error::InitialInconsistency { .. } => 2,
                Error::NotConverged { .. } | Error::NormDrift { .. } => 3,
                Error::InvalidSpec(_) | Error::InvalidParameter(_) => 4,
                _ => 1,
            },
            _ => 1,
        }
    }

    /// Remedy worth printing alongside the error, if any.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            AppError::Model(Error::ConstraintViolation { .. }) => Some(
                "the target current exceeds what the tracked system can carry; raise tracking.lattice_scale, \
                 switch to tracking.mode = \"k-scale\" or lower tracking.k_safety / boost.r_safety",
            ),
            AppError::Model(Error::NormDrift { .. }) => Some("reduce the step: raise numerics.steps_per_cycle"),
            AppError::Model(Error::NotConverged { .. }) => {
                Some("raise numerics.lanczos_krylov or numerics.lanczos_restarts, or loosen numerics.lanczos_tolerance")
            }
            _ => None,
        }
    }
}
