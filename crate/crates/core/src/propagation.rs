//! Fixed-step RK4 propagation of the driven and the tracking evolutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HubbardModel;
use crate::observables::{current_from_hop, HopExpectation};
use crate::sparse::norm;
use crate::state::ManyBodyState;
use crate::tracking::{at_time, tracking_step, TrackingConfig};

/// Single-step norm defect of the raw RK4 update that aborts a propagation.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Required agreement of `J_T(0)` with the initial current, relative to `max|J_T|`.
pub const INITIAL_CONSISTENCY: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid [{t_start}, {t_end}] with {steps} steps"
            )));
        }
        Ok(Self { t_start, t_end, steps })
    }

    /// Grid from 0 over `cycles` periods of length `period`.
    pub fn cycles(period: f64, cycles: u32, steps_per_cycle: usize) -> Result<Self> {
        Self::new(0.0, period * cycles as f64, steps_per_cycle * cycles as usize)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt()
        }
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub time: f64,
    /// Applied (or tracking) phase Φ in radians.
    pub phi: f64,
    /// `⟨J⟩` in eV·Å.
    pub current: f64,
    pub r: f64,
    pub theta: f64,
    pub doublon: f64,
    /// Norm of the RK4 update that produced this state, before it was
    /// projected back onto the unit sphere.
    pub norm: f64,
    /// `1 − |X|` with `X = ⟨J⟩ / (2 a t0 R)`.
    pub margin_x: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub final_state: ManyBodyState,
    /// `1 − Π‖ψ̃‖`: the norm an unprojected RK4 run would have lost.
    pub dissipation: f64,
    /// Times where Φ_T jumped by more than π between grid points.
    pub branch_jumps: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn currents(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.current).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi).collect()
    }

    pub fn doublons(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.doublon).collect()
    }

    pub fn dt(&self) -> f64 {
        self.records[1].time - self.records[0].time
    }

    /// Φ with principal-branch jumps of ±2π removed.
    pub fn unwrapped_phases(&self) -> Vec<f64> {
        unwrap_phase(&self.phases())
    }
}

pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            let d = p + offset - q;
            offset -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
        }
        let v = p + offset;
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Observables of the state at which the generator was evaluated.
#[derive(Debug, Clone, Copy)]
struct StageInfo {
    phi: f64,
    hop: HopExpectation,
    current: f64,
    margin_x: f64,
}

struct Workspace {
    kx: Vec<Complex64>,
    kdx: Vec<Complex64>,
    /// `⟨x|K|x⟩`, `⟨x|x⟩` and `⟨x|D|x⟩` of the last `hop` call.
    k_raw: Complex64,
    norm_sqr: f64,
    doublon_raw: f64,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            kx: vec![Complex64::new(0.0, 0.0); n],
            kdx: vec![Complex64::new(0.0, 0.0); n],
            k_raw: Complex64::new(0.0, 0.0),
            norm_sqr: 0.0,
            doublon_raw: 0.0,
        }
    }

    /// Hopping products for `x` and the normalised `⟨K⟩`.
    fn hop(&mut self, model: &HubbardModel, x: &[Complex64]) -> HopExpectation {
        model.apply_hopping(x, &mut self.kx, &mut self.kdx);
        let (mut z, mut nsq, mut d) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for ((xi, ki), di) in x.iter().zip(&self.kx).zip(model.doublon_diagonal()) {
            let p = xi.norm_sqr();
            z += xi.conj() * ki;
            nsq += p;
            d += di * p;
        }
        self.k_raw = z;
        self.norm_sqr = nsq;
        self.doublon_raw = d;
        HopExpectation::from_value(z / nsq)
    }

    /// `out = −i (H − E) x` with `H = c_fwd K + c_bwd K† + U D` from the
    /// products cached by `hop(x)`. `E` defaults to `⟨x|H|x⟩ / ⟨x|x⟩` and is
    /// returned.
    fn generator(
        &self,
        model: &HubbardModel,
        x: &[Complex64],
        c_fwd: Complex64,
        c_bwd: Complex64,
        shift: Option<f64>,
        out: &mut [Complex64],
    ) -> f64 {
        let u = model.spec().u;
        let shift = shift.unwrap_or_else(|| {
            (c_fwd * self.k_raw + c_bwd * self.k_raw.conj()).re / self.norm_sqr + u * self.doublon_raw / self.norm_sqr
        });
        let terms = x.iter().zip(&self.kx).zip(&self.kdx).zip(model.doublon_diagonal());
        for (o, (((xi, kf), kb), di)) in out.iter_mut().zip(terms) {
            let h = c_fwd * kf + c_bwd * kb + xi * (u * di - shift);
            *o = Complex64::new(h.im, -h.re);
        }
        shift
    }
}

/// Classical RK4 recording one entry per grid point.
///
/// `rhs(t, x, shift, out)` writes `−i (H − E) x` and returns `E`. Each step
/// freezes `E = ⟨H⟩` of the state at its start, so the integrator only sees
/// the energy spread of the state; the dropped global phase `∫E dt` is
/// restored on the final state. After every step the state is projected
/// back onto the unit sphere; the raw norm is recorded.
fn integrate<F>(
    state: &ManyBodyState,
    model: &HubbardModel,
    grid: &TimeGrid,
    mut rhs: F,
) -> Result<(Vec<TrajectoryRecord>, ManyBodyState, f64)>
where
    F: FnMut(f64, &[Complex64], Option<f64>, &mut [Complex64]) -> Result<(StageInfo, f64)>,
{
    let n = model.dim();
    if state.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.dim(),
        });
    }
    let dt = grid.dt();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let mut psi = state.amplitudes().to_vec();
    let (mut k, mut stage, mut acc) = (zero.clone(), zero.clone(), zero);
    let mut records = Vec::with_capacity(grid.len());
    let mut global_phase = 0.0;
    let mut raw_norm = norm(&psi);
    let mut retained = 1.0;
    let sites = model.spec().sites;
    let diag = model.doublon_diagonal();

    let record = |t: f64, psi: &[Complex64], raw_norm: f64, info: StageInfo| TrajectoryRecord {
        time: t,
        phi: info.phi,
        current: info.current,
        r: info.hop.r,
        theta: info.hop.theta,
        doublon: crate::observables::doublon_from_diagonal(psi, diag, sites),
        norm: raw_norm,
        margin_x: info.margin_x,
    };

    for step in 0..grid.steps {
        let t = grid.time(step);
        let (info, energy) = rhs(t, &psi, None, &mut k)?;
        records.push(record(t, &psi, raw_norm, info));
        let shift = Some(energy);
        global_phase += energy * dt;

        // acc = ψ + dt/6 (k1 + 2k2 + 2k3 + k4)
        for i in 0..n {
            acc[i] = psi[i] + dt / 6.0 * k[i];
            stage[i] = psi[i] + 0.5 * dt * k[i];
        }
        rhs(t + 0.5 * dt, &stage, shift, &mut k)?;
        for i in 0..n {
            acc[i] += dt / 3.0 * k[i];
            stage[i] = psi[i] + 0.5 * dt * k[i];
        }
        rhs(t + 0.5 * dt, &stage, shift, &mut k)?;
        for i in 0..n {
            acc[i] += dt / 3.0 * k[i];
            stage[i] = psi[i] + dt * k[i];
        }
        rhs(t + dt, &stage, shift, &mut k)?;
        for i in 0..n {
            psi[i] = acc[i] + dt / 6.0 * k[i];
        }

        raw_norm = norm(&psi);
        if !raw_norm.is_finite() || (raw_norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift {
                time: grid.time(step + 1),
                norm: raw_norm,
            });
        }
        retained *= raw_norm;
        psi.iter_mut().for_each(|a| *a /= raw_norm);
    }
    let (info, _) = rhs(grid.t_end, &psi, None, &mut k)?;
    records.push(record(grid.t_end, &psi, raw_norm, info));
    let phase = Complex64::from_polar(1.0, -global_phase);
    psi.iter_mut().for_each(|a| *a *= phase);
    Ok((records, ManyBodyState::from_normalized_unchecked(psi), 1.0 - retained))
}

/// Evolves under `H(Φ(t))` for a prescribed phase.
pub fn evolve_driven<P>(state: &ManyBodyState, model: &HubbardModel, phi_of_t: P, grid: &TimeGrid) -> Result<Trajectory>
where
    P: Fn(f64) -> f64,
{
    let spec = *model.spec();
    let mut ws = Workspace::new(model.dim());
    let (records, final_state, dissipation) = integrate(state, model, grid, |t, x, shift, out| {
        let phi = phi_of_t(t);
        if !phi.is_finite() {
            return Err(Error::NonFinite("driving phase"));
        }
        let hop = ws.hop(model, x);
        let fwd = -spec.t0 * Complex64::from_polar(1.0, -phi);
        let energy = ws.generator(model, x, fwd, fwd.conj(), shift, out);
        let s = (hop.theta - phi).sin();
        let info = StageInfo {
            phi,
            hop,
            current: current_from_hop(hop, spec.t0, spec.a, phi),
            margin_x: 1.0 - s.abs(),
        };
        Ok((info, energy))
    })?;
    Ok(Trajectory {
        records,
        final_state,
        dissipation,
        branch_jumps: Vec::new(),
    })
}

/// Evolves under the tracking generator `H_T(J_T(t), ψ)`.
///
/// The target is multiplied by `cfg.scale` and the current uses
/// `cfg.lattice_constant` when set. Each recorded `phi` is the tracking field
/// Φ_T; the recorded current equals the (scaled) target.
pub fn evolve_tracking<J>(
    state: &ManyBodyState,
    model: &HubbardModel,
    target: J,
    grid: &TimeGrid,
    cfg: &TrackingConfig,
) -> Result<Trajectory>
where
    J: Fn(f64) -> f64,
{
    cfg.validate()?;
    let spec = *model.spec();
    let a = cfg.effective_a(&spec);
    let k = cfg.target_scale();

    let peak = (0..grid.len())
        .map(|i| (k * target(grid.time(i))).abs())
        .fold(0.0, f64::max);
    let mut ws = Workspace::new(model.dim());
    let hop0 = ws.hop(model, state.amplitudes());
    let initial = current_from_hop(hop0, spec.t0, a, 0.0);
    let tolerance = INITIAL_CONSISTENCY * peak + 1e-14 * 2.0 * a * spec.t0 * hop0.r;
    let j0 = k * target(grid.t_start);
    if (j0 - initial).abs() > tolerance {
        return Err(Error::InitialInconsistency {
            target: j0,
            initial,
            tolerance,
        });
    }

    let (records, final_state, dissipation) = integrate(state, model, grid, |t, x, shift, out| {
        let j = k * target(t);
        if !j.is_finite() {
            return Err(Error::NonFinite("tracking target"));
        }
        let hop = ws.hop(model, x);
        let step = tracking_step(j, hop, spec.t0, a, cfg).map_err(|e| at_time(e, t))?;
        let fwd = step.p_plus * Complex64::from_polar(1.0, -step.theta);
        let bwd = step.p_minus * Complex64::from_polar(1.0, step.theta);
        let energy = ws.generator(model, x, fwd, bwd, shift, out);
        let info = StageInfo {
            phi: step.phi,
            hop,
            current: current_from_hop(hop, spec.t0, a, step.phi),
            margin_x: step.margin_x,
        };
        Ok((info, energy))
    })?;

    let branch_jumps: Vec<f64> = records
        .windows(2)
        .filter(|w| (w[1].phi - w[0].phi).abs() > std::f64::consts::PI)
        .map(|w| w[1].time)
        .collect();
    for t in &branch_jumps {
        log::debug!("tracking field crossed a principal-branch boundary at t = {t:.4}");
    }
    Ok(Trajectory {
        records,
        final_state,
        dissipation,
        branch_jumps,
    })
}
