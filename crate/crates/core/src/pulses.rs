//! Reference laser pulse and tunnelling-breakdown estimates.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{field_energy, thz_to_ev, FrequencyConvention, MV_PER_CM_IN_V_PER_ANGSTROM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Peak field E0 in MV/cm.
    pub e0: f64,
    /// Drive frequency in THz, read according to `convention`.
    pub frequency_thz: f64,
    pub cycles: u32,
    /// Lattice constant in Å.
    pub a: f64,
    pub convention: FrequencyConvention,
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.e0 >= 0.0 && self.e0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "E0 must be non-negative, got {}",
                self.e0
            )));
        }
        if !(self.frequency_thz > 0.0 && self.frequency_thz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "frequency must be positive, got {}",
                self.frequency_thz
            )));
        }
        if self.cycles == 0 {
            return Err(Error::InvalidParameter("pulse needs at least one cycle".into()));
        }
        if !(self.a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lattice constant must be positive, got {}",
                self.a
            )));
        }
        Ok(())
    }

    /// ħω0 in eV.
    pub fn omega(&self) -> f64 {
        thz_to_ev(self.frequency_thz, self.convention)
    }

    /// Peak phase amplitude `a E0 / ω0`.
    pub fn amplitude(&self) -> f64 {
        field_energy(self.a, self.e0) / self.omega()
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega()
    }

    /// `2π N / ω0` in ħ/eV.
    pub fn duration(&self) -> f64 {
        self.period() * self.cycles as f64
    }

    fn in_support(&self, t: f64) -> bool {
        let slack = 1e-12 * self.duration();
        t >= -slack && t <= self.duration() + slack
    }
}

/// `Φ(t) = (a E0/ω0) sin²(ω0 t / 2N) sin(ω0 t)`; zero outside the pulse.
pub fn reference_phase(t: f64, pulse: &PulseSpec) -> f64 {
    if !pulse.in_support(t) {
        log::warn!("t = {t} lies outside the pulse; phase clamped to zero");
        return 0.0;
    }
    let w = pulse.omega();
    let env = (w * t / (2.0 * pulse.cycles as f64)).sin();
    pulse.amplitude() * env * env * (w * t).sin()
}

/// Right-hand side of the threshold-time equation, `(dΦ/dt) / (a E0)`.
pub fn threshold_rhs(t: f64, pulse: &PulseSpec) -> f64 {
    if !pulse.in_support(t) {
        return 0.0;
    }
    let w = pulse.omega();
    let n = pulse.cycles as f64;
    let env = (w * t / (2.0 * n)).sin();
    env * env * (w * t).cos() + (w * t / n).sin() * (w * t).sin() / (2.0 * n)
}

/// `E(t) = −(1/a) dΦ/dt` in MV/cm.
pub fn electric_field(t: f64, pulse: &PulseSpec) -> f64 {
    -pulse.e0 * threshold_rhs(t, pulse)
}

const QUADRATURE_STEPS: usize = 4096;

/// Composite Simpson rule on `[0, upper]` with an even number of panels.
fn simpson<F: Fn(f64) -> f64>(f: F, upper: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = upper / n as f64;
    let mut sum = f(0.0) + f(upper);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Cut-off in `u` (with `y = cosh u`) beyond which `e^{−c y}` is below e^{−50}.
fn upper_limit(c: f64) -> f64 {
    (50.0 / c).max(2.0).acosh()
}

/// Mott gap of the half-filled chain in the thermodynamic limit,
/// `Δ = (16 t0²/U) ∫_1^∞ dy √(y² − 1) / sinh(2π t0 y / U)`.
pub fn mott_gap(u: f64, t0: f64) -> f64 {
    mott_gap_with_steps(u, t0, QUADRATURE_STEPS)
}

pub fn mott_gap_with_steps(u: f64, t0: f64, steps: usize) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let c = 2.0 * PI * t0 / u;
    let integrand = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        let s = x.sinh();
        s * s / (c * x.cosh()).sinh()
    };
    16.0 * t0 * t0 / u * simpson(integrand, upper_limit(c), steps)
}

/// Doublon-hole correlation length in lattice units,
/// `1/ξ = (4 t0/U) ∫_1^∞ dy ln(y + √(y² − 1)) / cosh(2π t0 y / U)`.
pub fn correlation_length(u: f64, t0: f64) -> Result<f64> {
    correlation_length_with_steps(u, t0, QUADRATURE_STEPS)
}

pub fn correlation_length_with_steps(u: f64, t0: f64, steps: usize) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter("correlation length diverges for U <= 0".into()));
    }
    let c = 2.0 * PI * t0 / u;
    let integrand = |x: f64| x * x.sinh() / (c * x.cosh()).cosh();
    Ok(1.0 / (4.0 * t0 / u * simpson(integrand, upper_limit(c), steps)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownInputs {
    /// Mott gap Δ in eV.
    pub gap: f64,
    /// Correlation length ξ in lattice units.
    pub correlation_length: f64,
}

impl BreakdownInputs {
    pub fn new(gap: f64, correlation_length: f64) -> Result<Self> {
        if !(gap >= 0.0) || !(correlation_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "breakdown inputs need gap >= 0 and xi > 0, got {gap}, {correlation_length}"
            )));
        }
        Ok(Self {
            gap,
            correlation_length,
        })
    }

    /// Thermodynamic-limit Δ(U) and ξ(U).
    pub fn for_interaction(u: f64, t0: f64) -> Result<Self> {
        Self::new(mott_gap(u, t0), correlation_length(u, t0)?)
    }

    /// `Δ / 2ξ` in eV: the energy the field must deliver per lattice spacing.
    pub fn threshold_energy(&self) -> f64 {
        self.gap / (2.0 * self.correlation_length)
    }
}

/// `E_th = Δ / (2 ξ a)` in MV/cm.
pub fn breakdown_threshold(inputs: &BreakdownInputs, a: f64) -> f64 {
    inputs.threshold_energy() / a / MV_PER_CM_IN_V_PER_ANGSTROM
}

const THRESHOLD_SCAN_SAMPLES: usize = 10_000;

/// Earliest time at which the reference pulse reaches the breakdown
/// threshold, or `None` when it never does.
pub fn threshold_time(pulse: &PulseSpec, inputs: &BreakdownInputs) -> Option<f64> {
    if pulse.e0 <= 0.0 {
        return None;
    }
    let lhs = breakdown_threshold(inputs, pulse.a) / pulse.e0;
    let f = |t: f64| threshold_rhs(t, pulse) - lhs;
    let duration = pulse.duration();
    if f(0.0) >= 0.0 {
        return Some(0.0);
    }
    let dt = duration / THRESHOLD_SCAN_SAMPLES as f64;
    let mut lo = 0.0;
    for k in 1..=THRESHOLD_SCAN_SAMPLES {
        let hi = k as f64 * dt;
        if f(hi) >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-10 * b {
                let mid = 0.5 * (a + b);
                if f(mid) >= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Some(b);
        }
        lo = hi;
    }
    None
}

/// First time the rate `|dΦ/dt|` of a sampled phase reaches `Δ / 2ξ`.
///
/// `aE = −dΦ/dt`, so this compares the field against `E_th` independently of
/// the lattice constant. Phases should be branch-unwrapped.
pub fn first_threshold_crossing(times: &[f64], phases: &[f64], inputs: &BreakdownInputs) -> Option<f64> {
    let threshold = inputs.threshold_energy();
    let n = times.len().min(phases.len());
    (1..n.saturating_sub(1)).find_map(|i| {
        let rate = (phases[i + 1] - phases[i - 1]) / (times[i + 1] - times[i - 1]);
        (rate.abs() >= threshold).then_some(times[i])
    })
}
