use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::{inner, norm};

/// Normalised amplitude vector over a Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyState {
    amplitudes: Vec<Complex64>,
}

impl ManyBodyState {
    /// Normalises `amplitudes`. Fails on a zero or non-finite vector.
    pub fn new(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !n.is_finite() {
            return Err(Error::NonFinite("state amplitudes"));
        }
        if n == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(Self { amplitudes })
    }

    /// Wraps amplitudes that are already normalised (checked to 1e-10).
    pub fn from_normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state norm {n} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    pub(crate) fn from_normalized_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// A basis vector.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn overlap(&self, other: &ManyBodyState) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &ManyBodyState) -> f64 {
        self.overlap(other).norm()
    }

    /// Multiplies by a global phase `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let p = Complex64::from_polar(1.0, alpha);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * p).collect(),
        }
    }
}
