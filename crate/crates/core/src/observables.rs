//! Expectation values evaluated along trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::LatticeSpec;
use crate::sparse::{inner, LinearOperator, SparseOperator};
use crate::state::ManyBodyState;

/// Polar form `R e^{iθ}` of the forward-hopping expectation `⟨K⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopExpectation {
    pub r: f64,
    /// Principal value in (−π, π]; zero when `r == 0`.
    pub theta: f64,
}

impl HopExpectation {
    pub fn from_value(z: Complex64) -> Self {
        let r = z.norm();
        if r == 0.0 {
            return Self { r, theta: 0.0 };
        }
        let mut theta = z.arg();
        if theta <= -std::f64::consts::PI {
            theta += std::f64::consts::TAU;
        }
        Self { r, theta }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }
}

pub fn hop_expectation<A: LinearOperator>(state: &ManyBodyState, hop_forward: &A) -> HopExpectation {
    let psi = state.amplitudes();
    let mut kpsi = vec![Complex64::new(0.0, 0.0); psi.len()];
    hop_forward.apply(psi, &mut kpsi);
    HopExpectation::from_value(inner(psi, &kpsi))
}

/// `⟨J⟩ = 2 a t0 R sin(θ − Φ)` in units of eV·Å.
pub fn current_from_hop(hop: HopExpectation, t0: f64, a: f64, phi: f64) -> f64 {
    2.0 * a * t0 * hop.r * (hop.theta - phi).sin()
}

pub fn current_expectation<A: LinearOperator>(
    state: &ManyBodyState,
    hop_forward: &A,
    spec: &LatticeSpec,
    phi: f64,
) -> f64 {
    current_from_hop(hop_expectation(state, hop_forward), spec.t0, spec.a, phi)
}

/// Explicit current operator `Ĵ(Φ) = −i a t0 (e^{−iΦ} K − e^{iΦ} K†)`.
pub fn current_operator(hop_forward: &SparseOperator, spec: &LatticeSpec, phi: f64) -> Result<SparseOperator> {
    let c = Complex64::new(0.0, -spec.a * spec.t0) * Complex64::from_polar(1.0, -phi);
    SparseOperator::linear_combination(&[(c, hop_forward), (c.conj(), &hop_forward.adjoint())])
}

/// Doublon occupation per site, `D = ⟨Σ_j n_j↑ n_j↓⟩ / L`.
pub fn doublon_occupation(state: &ManyBodyState, doublon: &SparseOperator, spec: &LatticeSpec) -> f64 {
    doublon.expectation(state.amplitudes()).re / spec.sites as f64
}

/// Diagonal fast path of [`doublon_occupation`].
pub fn doublon_from_diagonal(psi: &[Complex64], diag: &[f64], sites: usize) -> f64 {
    psi.iter().zip(diag).map(|(a, d)| a.norm_sqr() * d).sum::<f64>() / sites as f64
}

/// Commutator expectations needed to track a general observable `Ô`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorExpectations {
    /// `R_O e^{iθ_O} = ⟨[K, Ô]⟩`.
    pub hop: HopExpectation,
    /// Interaction contribution to `d⟨Ô⟩/dt`, `i U ⟨[D, Ô]⟩`, in eV times units of `Ô`.
    pub b: f64,
    /// Imaginary part discarded from `b`; zero up to round-off for Hermitian `Ô`.
    pub b_imaginary: f64,
}

pub fn commutator_expectations(
    state: &ManyBodyState,
    hop_forward: &SparseOperator,
    doublon: &SparseOperator,
    observable: &SparseOperator,
    spec: &LatticeSpec,
) -> Result<CommutatorExpectations> {
    let n = state.dim();
    hop_forward.check_dim(n)?;
    doublon.check_dim(n)?;
    observable.check_dim(n)?;
    let psi = state.amplitudes();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let (mut kpsi, mut kdpsi, mut opsi, mut dpsi) = (zero.clone(), zero.clone(), zero.clone(), zero);
    hop_forward.apply_with_adjoint(psi, &mut kpsi, &mut kdpsi);
    observable.apply(psi, &mut opsi);
    doublon.apply(psi, &mut dpsi);

    // ⟨K O⟩ − ⟨O K⟩ with O Hermitian
    let kc = inner(&kdpsi, &opsi) - inner(&opsi, &kpsi);
    let dc = inner(&dpsi, &opsi) - inner(&opsi, &dpsi);
    let b = Complex64::new(0.0, spec.u) * dc;
    Ok(CommutatorExpectations {
        hop: HopExpectation::from_value(kc),
        b: b.re,
        b_imaginary: b.im,
    })
}

/// `d⟨Ô⟩/dt` under `H(Φ)` assembled from commutator expectations.
pub fn observable_rate(comm: &CommutatorExpectations, t0: f64, phi: f64) -> f64 {
    2.0 * t0 * comm.hop.r * (comm.hop.theta - phi).sin() + comm.b
}
