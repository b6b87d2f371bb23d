//! Dense-matrix reference propagation for small chains.
//!
//! Same scheme as [`crate::propagation`] written out with explicit matrices;
//! used as an independent cross-check of the sparse kernels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Result;
use crate::lattice::HubbardModel;
use crate::observables::HopExpectation;
use crate::propagation::TimeGrid;
use crate::state::ManyBodyState;
use crate::tracking::{at_time, tracking_step, TrackingConfig};

/// Largest Hilbert-space dimension accepted (dense matrices are dim²).
pub const MAX_DENSE_DIM: usize = 1024;

/// Tracks `target` with dense `K`, `K†`, `D` and returns the final state.
pub fn evolve_tracking_dense<J>(
    state: &ManyBodyState,
    model: &HubbardModel,
    target: J,
    grid: &TimeGrid,
    cfg: &TrackingConfig,
) -> Result<ManyBodyState>
where
    J: Fn(f64) -> f64,
{
    cfg.validate()?;
    if model.dim() > MAX_DENSE_DIM {
        return Err(crate::Error::InvalidParameter(format!(
            "dense propagation limited to dimension {MAX_DENSE_DIM}, got {}",
            model.dim()
        )));
    }
    let spec = *model.spec();
    let a = cfg.effective_a(&spec);
    let k_scale = cfg.target_scale();
    let k: DMatrix<Complex64> = model.hop_forward().to_dense();
    let kd = k.adjoint();
    let d = model.doublon().to_dense();
    let u = Complex64::new(spec.u, 0.0);

    let apply = |t: f64, x: &DVector<Complex64>| -> Result<(DVector<Complex64>, f64)> {
        let kx = &k * x;
        let nsq = x.norm_squared();
        let hop = HopExpectation::from_value(x.dotc(&kx) / nsq);
        let step = tracking_step(k_scale * target(t), hop, spec.t0, a, cfg).map_err(|e| at_time(e, t))?;
        let hx = kx * (step.p_plus * Complex64::from_polar(1.0, -step.theta))
            + &kd * x * (step.p_minus * Complex64::from_polar(1.0, step.theta))
            + &d * x * u;
        let e = x.dotc(&hx).re / nsq;
        Ok((hx, e))
    };

    let dt = grid.dt();
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let mi = Complex64::new(0.0, -1.0);
    let mut psi = DVector::from_column_slice(state.amplitudes());
    let mut phase = 0.0;
    for n in 0..grid.steps {
        let t = grid.time(n);
        let (h1, e) = apply(t, &psi)?;
        phase += e * dt;
        let shift = Complex64::new(e, 0.0);
        let f = |hx: DVector<Complex64>, x: &DVector<Complex64>| (hx - x * shift) * mi;
        let k1 = f(h1, &psi);
        let x2 = &psi + &k1 * half;
        let k2 = f(apply(t + 0.5 * dt, &x2)?.0, &x2);
        let x3 = &psi + &k2 * half;
        let k3 = f(apply(t + 0.5 * dt, &x3)?.0, &x3);
        let x4 = &psi + &k3 * full;
        let k4 = f(apply(t + dt, &x4)?.0, &x4);
        psi +=
            (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
        let nrm = psi.norm();
        psi /= Complex64::new(nrm, 0.0);
    }
    ManyBodyState::new((psi * Complex64::from_polar(1.0, -phase)).iter().copied().collect())
}
