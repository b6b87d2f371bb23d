//! Tracking control: the field that makes an expectation value follow a
//! prescribed trajectory exactly.
//!
//! For the current, the hopping expectation `⟨K⟩ = R e^{iθ}` fixes the
//! admissible range `|J| ≤ 2 a t0 R`. Inside that range the field is
//! `Φ_T = arcsin(−X) + θ` with `X = J_T / (2 a t0 R)`, and the state-dependent
//! generator
//!
//! ```text
//! H_T = P₊ e^{−iθ} K + P₋ e^{iθ} K† + U D,   P± = −t0 (√(1 − X²) ± iX)
//! ```
//!
//! acts on the state exactly as `H(Φ_T)` does.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Constraint, Error, Result};
use crate::lattice::LatticeSpec;
use crate::observables::{CommutatorExpectations, HopExpectation};
use crate::sparse::{LinearOperator, SparseOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingConfig {
    /// Required distance of `|X|` from 1.
    pub epsilon1: f64,
    /// Floor for `R`.
    pub epsilon2: f64,
    /// Multiplies the target before tracking (`J_s = k J_T`).
    pub scale: Option<f64>,
    /// Lattice constant (Å) of the tracked system, if different from the physical one.
    pub lattice_constant: Option<f64>,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            epsilon1: 1e-3,
            epsilon2: 1e-6,
            scale: None,
            lattice_constant: None,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon1 > 0.0 && self.epsilon1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps1 must lie in (0, 1), got {}",
                self.epsilon1
            )));
        }
        if !(self.epsilon2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps2 must be positive, got {}",
                self.epsilon2
            )));
        }
        if let Some(k) = self.scale {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "target scale must be positive, got {k}"
                )));
            }
        }
        if let Some(a) = self.lattice_constant {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "tracking lattice constant must be positive, got {a}"
                )));
            }
        }
        Ok(())
    }

    /// Lattice constant entering `X` and the current.
    pub fn effective_a(&self, spec: &LatticeSpec) -> f64 {
        self.lattice_constant.unwrap_or(spec.a)
    }

    pub fn target_scale(&self) -> f64 {
        self.scale.unwrap_or(1.0)
    }
}

/// Everything determined by the state and the target at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingStepData {
    pub x: f64,
    pub p_plus: Complex64,
    pub p_minus: Complex64,
    pub theta: f64,
    pub r: f64,
    /// Tracking field Φ_T in radians.
    pub phi: f64,
    /// `1 − |X|`.
    pub margin_x: f64,
}

fn violation(constraint: Constraint, value: f64, margin: f64) -> Error {
    Error::ConstraintViolation {
        constraint,
        time: f64::NAN,
        value,
        margin,
    }
}

/// Attaches a time to a constraint violation raised by the pure functions below.
pub fn at_time(err: Error, t: f64) -> Error {
    match err {
        Error::ConstraintViolation {
            constraint,
            value,
            margin,
            ..
        } => Error::ConstraintViolation {
            constraint,
            time: t,
            value,
            margin,
        },
        other => other,
    }
}

fn check_hopping_floor(r: f64, cfg: &TrackingConfig) -> Result<()> {
    if r > cfg.epsilon2 {
        Ok(())
    } else {
        Err(violation(Constraint::HoppingFloor, r, r - cfg.epsilon2))
    }
}

/// `X = J_T / (2 a t0 R)`.
pub fn tracking_ratio(j_target: f64, r: f64, t0: f64, a: f64, cfg: &TrackingConfig) -> Result<f64> {
    check_hopping_floor(r, cfg)?;
    Ok(j_target / (2.0 * a * t0 * r))
}

/// `P± = −t0 (√(1 − X²) ± iX)`, rejecting `|X| ≥ 1 − ε1`.
pub fn tracking_coefficients(x: f64, t0: f64, cfg: &TrackingConfig) -> Result<(Complex64, Complex64)> {
    if !x.is_finite() {
        return Err(Error::NonFinite("tracking ratio X"));
    }
    let margin = 1.0 - x.abs();
    if margin <= cfg.epsilon1 {
        return Err(violation(Constraint::Feasibility, x, margin));
    }
    let c = (1.0 - x * x).sqrt();
    Ok((-t0 * Complex64::new(c, x), -t0 * Complex64::new(c, -x)))
}

/// Tracking field `Φ_T = arcsin(−X) + θ` on the principal arcsin branch.
pub fn field_from_ratio(x: f64, theta: f64) -> f64 {
    (-x).asin() + theta
}

/// Full tracking data for a current target.
pub fn tracking_step(
    j_target: f64,
    hop: HopExpectation,
    t0: f64,
    a: f64,
    cfg: &TrackingConfig,
) -> Result<TrackingStepData> {
    let x = tracking_ratio(j_target, hop.r, t0, a, cfg)?;
    step_from_ratio(x, hop, t0, cfg)
}

fn step_from_ratio(x: f64, hop: HopExpectation, t0: f64, cfg: &TrackingConfig) -> Result<TrackingStepData> {
    let (p_plus, p_minus) = tracking_coefficients(x, t0, cfg)?;
    Ok(TrackingStepData {
        x,
        p_plus,
        p_minus,
        theta: hop.theta,
        r: hop.r,
        phi: field_from_ratio(x, hop.theta),
        margin_x: 1.0 - x.abs(),
    })
}

/// Φ_T for a current target; see [`tracking_step`].
pub fn tracking_field(j_target: f64, hop: HopExpectation, t0: f64, a: f64, cfg: &TrackingConfig) -> Result<f64> {
    Ok(tracking_step(j_target, hop, t0, a, cfg)?.phi)
}

/// Explicit `H_T` for one step.
pub fn build_tracking_hamiltonian(
    hop_forward: &SparseOperator,
    doublon: &SparseOperator,
    spec: &LatticeSpec,
    step: &TrackingStepData,
) -> Result<SparseOperator> {
    doublon.check_dim(hop_forward.dim())?;
    let fwd = step.p_plus * Complex64::from_polar(1.0, -step.theta);
    let bwd = step.p_minus * Complex64::from_polar(1.0, step.theta);
    SparseOperator::linear_combination(&[
        (fwd, hop_forward),
        (bwd, &hop_forward.adjoint()),
        (Complex64::new(spec.u, 0.0), doublon),
    ])
}

/// `X = (dO_T/dt − B) / (2 t0 R_O)` for tracking a general observable.
pub fn observable_tracking_ratio(do_target_dt: f64, b: f64, r_o: f64, t0: f64, cfg: &TrackingConfig) -> Result<f64> {
    check_hopping_floor(r_o, cfg)?;
    Ok((do_target_dt - b) / (2.0 * t0 * r_o))
}

/// Tracking data for a general observable, with `(R, θ) → (R_O, θ_O)`.
pub fn observable_tracking_step(
    do_target_dt: f64,
    comm: &CommutatorExpectations,
    t0: f64,
    cfg: &TrackingConfig,
) -> Result<TrackingStepData> {
    let x = observable_tracking_ratio(do_target_dt, comm.b, comm.hop.r, t0, cfg)?;
    step_from_ratio(x, comm.hop, t0, cfg)
}

/// Scale factor making a target feasible against a trial hopping floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScaling {
    /// `2 a t0` of the tracked system (eV·Å).
    pub two_a_t0: f64,
    /// Lowest `R` the tracked state is expected to reach.
    pub r_floor: f64,
    pub epsilon1: f64,
    /// Permit `k > 1`.
    pub allow_amplification: bool,
}

/// Returns `k` with `max|k J_T| = (1 − ε1) · 2 a t0 R_floor` (capped at 1
/// unless amplification is allowed) and the scaled series.
pub fn scale_target(series: &[f64], scaling: &TargetScaling) -> Result<(f64, Vec<f64>)> {
    let peak = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter("cannot scale an all-zero target".into()));
    }
    if !(scaling.r_floor > 0.0 && scaling.two_a_t0 > 0.0) {
        return Err(Error::InvalidParameter("scaling floor must be positive".into()));
    }
    let mut k = (1.0 - scaling.epsilon1) * scaling.two_a_t0 * scaling.r_floor / peak;
    if !scaling.allow_amplification {
        k = k.min(1.0);
    }
    Ok((k, series.iter().map(|v| k * v).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const T0: f64 = 0.52;
    const A: f64 = 4.0;

    #[test]
    fn ratio_definition_and_edges() {
        let cfg = TrackingConfig::default();
        assert_eq!(tracking_ratio(0.0, 2.0, T0, A, &cfg).unwrap(), 0.0);
        let x = tracking_ratio(2.0 * A * T0 * 2.0, 2.0, T0, A, &cfg).unwrap();
        assert!((x - 1.0).abs() < 1e-15);
        assert!(tracking_coefficients(x, T0, &cfg).is_err());

        let x60 = tracking_ratio(1.0, 2.0, T0, 60.0 * A, &cfg).unwrap();
        let x1 = tracking_ratio(1.0, 2.0, T0, A, &cfg).unwrap();
        assert!((x60 * 60.0 - x1).abs() < 1e-15);

        match tracking_ratio(1.0, 1e-7, T0, A, &cfg) {
            Err(Error::ConstraintViolation { constraint, .. }) => assert_eq!(constraint, Constraint::HoppingFloor),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coefficient_values() {
        let cfg = TrackingConfig::default();
        let (pp, pm) = tracking_coefficients(0.0, T0, &cfg).unwrap();
        assert_eq!(pp, Complex64::new(-T0, 0.0));
        assert_eq!(pm, Complex64::new(-T0, 0.0));

        let (pp, pm) = tracking_coefficients(FRAC_1_SQRT_2, T0, &cfg).unwrap();
        assert!((pp - Complex64::new(-T0 * FRAC_1_SQRT_2, -T0 * FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((pm - Complex64::new(-T0 * FRAC_1_SQRT_2, T0 * FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn field_values() {
        let cfg = TrackingConfig::default();
        let hop = HopExpectation { r: 3.0, theta: 0.0 };
        assert_eq!(tracking_field(0.0, hop, T0, A, &cfg).unwrap(), 0.0);
        let half = A * T0 * 3.0;
        assert!((tracking_field(half, hop, T0, A, &cfg).unwrap() + PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn observable_ratio_edges() {
        let cfg = TrackingConfig::default();
        assert_eq!(observable_tracking_ratio(0.7, 0.7, 1.0, T0, &cfg).unwrap(), 0.0);
        let x = observable_tracking_ratio(2.0 * T0 * 1.5, 0.0, 1.5, T0, &cfg).unwrap();
        assert!((x - 1.0).abs() < 1e-15);
        assert!(tracking_coefficients(x, T0, &cfg).is_err());
        assert!(observable_tracking_ratio(1.0, 0.0, 0.0, T0, &cfg).is_err());
    }

    #[test]
    fn scaling_rules() {
        let s = TargetScaling {
            two_a_t0: 2.0,
            r_floor: 1.0,
            epsilon1: 0.0,
            allow_amplification: false,
        };
        // already feasible: no amplification
        let (k, _) = scale_target(&[0.5, -1.0], &s).unwrap();
        assert_eq!(k, 1.0);
        let (k_full, _) = scale_target(&[4.0, -8.0], &s).unwrap();
        let (k_half, scaled) = scale_target(&[4.0, -8.0], &TargetScaling { r_floor: 0.5, ..s }).unwrap();
        assert!((k_half - 0.5 * k_full).abs() < 1e-15);
        assert!((scaled[1] + 1.0).abs() < 1e-15);
        assert!(scale_target(&[0.0, 0.0], &s).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrackingConfig {
            epsilon1: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrackingConfig {
            epsilon2: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrackingConfig {
            scale: Some(-1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrackingConfig::default().validate().is_ok());
    }
}
