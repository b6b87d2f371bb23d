//! Tracking control of the current (or any observable) in the laser-driven
//! one-dimensional Fermi-Hubbard chain.
//!
//! Given a target trajectory `J_T(t)`, [`propagation::evolve_tracking`]
//! integrates the state-dependent tracking generator and records the field
//! `Φ_T(t)` that reproduces the target exactly when fed back into the
//! physical Hamiltonian through [`propagation::evolve_driven`].

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod error;
pub mod ground_state;
pub mod lattice;
pub mod observables;
pub mod propagation;
pub mod pulses;
pub mod sparse;
pub mod spectra;
pub mod spline;
pub mod state;
pub mod tracking;
pub mod units;

pub use error::{Constraint, Error, Result};
pub use ground_state::{ground_state, LanczosConfig};
pub use lattice::{HubbardModel, LatticeSpec};
pub use propagation::{evolve_driven, evolve_tracking, TimeGrid, Trajectory, TrajectoryRecord};
pub use pulses::{BreakdownInputs, PulseSpec};
pub use sparse::{LinearOperator, SparseOperator};
pub use state::ManyBodyState;
pub use tracking::TrackingConfig;
