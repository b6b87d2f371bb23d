//! Lowest eigenpair of a Hermitian operator by restarted Lanczos iteration
//! with full reorthogonalisation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{inner, norm, LinearOperator};
use crate::state::ManyBodyState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosConfig {
    /// Krylov vectors kept per cycle.
    pub max_krylov: usize,
    /// Required `‖Hψ − Eψ‖` in eV.
    pub tolerance: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_krylov: 60,
            tolerance: 1e-9,
            max_restarts: 40,
            seed: 0x5eed,
        }
    }
}

impl LanczosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_krylov < 2 {
            return Err(Error::InvalidParameter("Krylov dimension must be at least 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("Lanczos tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn zero(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); n]
}

/// Projects `w` off every vector in `basis`, twice for stability.
fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = inner(v, w);
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
        }
    }
}

fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, &emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (emin, eig.eigenvectors.column(imin).iter().copied().collect())
}

/// Returns the lowest eigenvalue (eV) and its normalised eigenvector.
///
/// The global phase is fixed so the largest-magnitude amplitude is real and
/// positive, which makes the ground state of a real Hamiltonian real.
pub fn ground_state<A: LinearOperator>(h: &A, cfg: &LanczosConfig) -> Result<(f64, ManyBodyState)> {
    cfg.validate()?;
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty Hilbert space".into()));
    }
    if n == 1 {
        let v = vec![Complex64::new(1.0, 0.0)];
        let mut hv = zero(1);
        h.apply(&v, &mut hv);
        return Ok((hv[0].re, ManyBodyState::new(v)?));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0)).collect();
    let s = norm(&start);
    start.iter_mut().for_each(|x| *x /= s);

    let krylov = cfg.max_krylov.min(n);
    let mut residual = f64::INFINITY;
    let mut hv = zero(n);

    for _restart in 0..=cfg.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(krylov);
        let mut alpha = Vec::with_capacity(krylov);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov);
        basis.push(start.clone());

        loop {
            let v = basis.last().expect("non-empty basis");
            let mut w = zero(n);
            h.apply(v, &mut w);
            alpha.push(inner(v, &w).re);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            let m = alpha.len();
            // invariant subspace found, or basis full
            if b < 1e-14 || m == krylov {
                break;
            }
            if m % 5 == 0 {
                let (_, y) = lowest_ritz(&alpha, &beta);
                if (b * y[m - 1]).abs() < 0.1 * cfg.tolerance {
                    break;
                }
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }

        let (_, y) = lowest_ritz(&alpha, &beta);
        let mut ritz = zero(n);
        for (coef, v) in y.iter().zip(&basis) {
            ritz.iter_mut().zip(v).for_each(|(r, vi)| *r += *coef * vi);
        }
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= rn);

        h.apply(&ritz, &mut hv);
        let e = inner(&ritz, &hv).re;
        residual = hv
            .iter()
            .zip(&ritz)
            .map(|(a, b)| (a - e * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual < cfg.tolerance {
            let pivot = ritz
                .iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("non-empty vector");
            let phase = pivot.conj() / pivot.norm();
            ritz.iter_mut().for_each(|x| *x *= phase);
            return Ok((e, ManyBodyState::new(ritz)?));
        }
        start = ritz;
    }
    Err(Error::NotConverged {
        residual,
        restarts: cfg.max_restarts,
    })
}
