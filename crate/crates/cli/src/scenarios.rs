//! Scenario runners. Each returns in-memory results; writing is left to
//! [`crate::output`] so the acceptance suite can inspect runs directly.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hubbard_tracking::observables::{hop_expectation, HopExpectation};
use hubbard_tracking::pulses::{breakdown_threshold, first_threshold_crossing, reference_phase, threshold_time};
use hubbard_tracking::spectra::{boosted_target_current, current_spectrum, BoostSpec, Spectrum};
use hubbard_tracking::spline::CubicSpline;
use hubbard_tracking::tracking::{scale_target, TargetScaling};
use hubbard_tracking::units::natural_time_to_fs;
use hubbard_tracking::{
    evolve_driven, evolve_tracking, ground_state, BreakdownInputs, Error, HubbardModel, ManyBodyState, PulseSpec,
    TimeGrid, TrackingConfig, Trajectory,
};
use serde::Serialize;

use crate::config::{Config, ScaleMode};
use crate::AppError;

pub type AppResult<T> = Result<T, AppError>;

/// Resolved configuration plus the derived pulse and grid.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: Config,
    pub pulse: PulseSpec,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub u_over_t0: f64,
    pub model: HubbardModel,
    pub energy: f64,
    pub psi: ManyBodyState,
    pub hop: HopExpectation,
}

#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub u_over_t0: f64,
    pub energy: f64,
    pub trajectory: Trajectory,
    pub spectrum: Spectrum,
}

#[derive(Debug, Clone)]
pub struct TrackedRun {
    /// Interaction of the tracked system.
    pub u_over_t0: f64,
    /// Interaction of the system whose current is the target.
    pub source_u_over_t0: f64,
    pub tracking: TrackingConfig,
    /// Lattice constant used for the current (Å).
    pub a_eff: f64,
    /// Multiplier applied to the target (`k`).
    pub scale: f64,
    pub halvings: u32,
    pub trajectory: Trajectory,
    pub spectrum: Spectrum,
}

impl TrackedRun {
    pub fn grid(&self) -> AppResult<TimeGrid> {
        grid_of(&self.trajectory)
    }
}

fn grid_of(tr: &Trajectory) -> AppResult<TimeGrid> {
    let n = tr.records.len();
    Ok(TimeGrid::new(tr.records[0].time, tr.records[n - 1].time, n - 1)?)
}

/// Constants derived for one interaction strength.
#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub u_over_t0: f64,
    pub u_ev: f64,
    pub gap_ev: f64,
    /// Correlation length in lattice units; absent for U = 0.
    pub correlation_length: Option<f64>,
    /// Breakdown threshold E_th in MV/cm; absent for U = 0.
    pub e_th_mv_cm: Option<f64>,
    /// First time the reference pulse reaches E_th.
    pub t_th_natural: Option<f64>,
    pub t_th_fs: Option<f64>,
}

/// Pulse-level constants shared by every run.
#[derive(Debug, Clone, Serialize)]
pub struct PulseConstants {
    pub hbar_omega0_ev: f64,
    pub a_e0_ev: f64,
    pub phase_amplitude_rad: f64,
    pub period_natural: f64,
    pub period_fs: f64,
    pub duration_natural: f64,
    pub dt_natural: f64,
}

impl Context {
    pub fn new(cfg: Config) -> AppResult<Self> {
        cfg.validate()?;
        let pulse = cfg.pulse_spec();
        let grid = TimeGrid::cycles(pulse.period(), pulse.cycles, cfg.numerics.steps_per_cycle)?;
        Ok(Self { cfg, pulse, grid })
    }

    /// Same context with the step divided by `factor`.
    pub fn refined(&self, factor: usize) -> AppResult<Self> {
        let mut cfg = self.cfg.clone();
        cfg.numerics.steps_per_cycle *= factor;
        Self::new(cfg)
    }

    pub fn constants(&self) -> PulseConstants {
        let p = &self.pulse;
        PulseConstants {
            hbar_omega0_ev: p.omega(),
            a_e0_ev: p.amplitude() * p.omega(),
            phase_amplitude_rad: p.amplitude(),
            period_natural: p.period(),
            period_fs: natural_time_to_fs(p.period()),
            duration_natural: p.duration(),
            dt_natural: self.grid.dt(),
        }
    }

    pub fn derived(&self, u_over_t0: f64) -> AppResult<Derived> {
        let t0 = self.cfg.lattice.t0;
        let u = u_over_t0 * t0;
        if u_over_t0 == 0.0 {
            return Ok(Derived {
                u_over_t0,
                u_ev: 0.0,
                gap_ev: 0.0,
                correlation_length: None,
                e_th_mv_cm: None,
                t_th_natural: None,
                t_th_fs: None,
            });
        }
        let inputs = BreakdownInputs::for_interaction(u, t0)?;
        let t_th = threshold_time(&self.pulse, &inputs);
        Ok(Derived {
            u_over_t0,
            u_ev: u,
            gap_ev: inputs.gap,
            correlation_length: Some(inputs.correlation_length),
            e_th_mv_cm: Some(breakdown_threshold(&inputs, self.cfg.lattice.a)),
            t_th_natural: t_th,
            t_th_fs: t_th.map(natural_time_to_fs),
        })
    }

    pub fn ground(&self, u_over_t0: f64) -> AppResult<GroundState> {
        let model = HubbardModel::new(self.cfg.lattice_spec(u_over_t0))?;
        let (energy, psi) = ground_state(&model.hamiltonian_at(0.0), &self.cfg.lanczos())?;
        let hop = hop_expectation(&psi, model.hop_forward());
        log::info!(
            "U = {u_over_t0} t0: E0 = {energy:.10} eV, R = {:.6}, dim = {}",
            hop.r,
            model.dim()
        );
        Ok(GroundState {
            u_over_t0,
            model,
            energy,
            psi,
            hop,
        })
    }

    pub fn spectrum(&self, tr: &Trajectory) -> AppResult<Spectrum> {
        Ok(current_spectrum(&tr.times(), &tr.currents(), self.pulse.omega())?)
    }

    pub fn drive(&self, ground: &GroundState, grid: &TimeGrid) -> AppResult<Trajectory> {
        Ok(evolve_driven(
            &ground.psi,
            &ground.model,
            |t| reference_phase(t, &self.pulse),
            grid,
        )?)
    }

    pub fn reference_from(&self, ground: &GroundState) -> AppResult<ReferenceRun> {
        log::info!("reference run at U = {} t0", ground.u_over_t0);
        let trajectory = self.drive(ground, &self.grid)?;
        let spectrum = self.spectrum(&trajectory)?;
        Ok(ReferenceRun {
            u_over_t0: ground.u_over_t0,
            energy: ground.energy,
            trajectory,
            spectrum,
        })
    }

    pub fn reference(&self, u_over_t0: f64) -> AppResult<(GroundState, ReferenceRun)> {
        let ground = self.ground(u_over_t0)?;
        let run = self.reference_from(&ground)?;
        Ok((ground, run))
    }

    pub fn jobs(&self) -> usize {
        self.cfg.jobs()
    }
}

/// Runs `f` over `items` on up to `jobs` threads, preserving order. The first
/// error (in item order) is returned.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> AppResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> AppResult<R> + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<AppResult<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

pub fn run_reference(ctx: &Context) -> AppResult<Vec<ReferenceRun>> {
    par_map(ctx.jobs(), &ctx.cfg.lattice.u_over_t0, |&u| Ok(ctx.reference(u)?.1))
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub derived: Derived,
    pub reference: ReferenceRun,
    /// D(t_th) and D(t_th + one cycle), when the threshold is reached in time.
    pub doublon_at_threshold: Option<(f64, f64)>,
}

/// Linear interpolation of a sampled series on a uniform grid.
pub fn sample_at(tr: &Trajectory, values: &[f64], t: f64) -> Option<f64> {
    let dt = tr.dt();
    let x = (t - tr.records[0].time) / dt;
    if x < 0.0 || x > (values.len() - 1) as f64 {
        return None;
    }
    let i = (x.floor() as usize).min(values.len() - 2);
    let f = x - i as f64;
    Some(values[i] * (1.0 - f) + values[i + 1] * f)
}

pub fn run_doublon_sweep(ctx: &Context) -> AppResult<Vec<SweepEntry>> {
    par_map(ctx.jobs(), &ctx.cfg.sweep.u_over_t0, |&u| {
        let derived = ctx.derived(u)?;
        let (_, reference) = ctx.reference(u)?;
        let d = reference.trajectory.doublons();
        let doublon_at_threshold = derived.t_th_natural.and_then(|t| {
            let before = sample_at(&reference.trajectory, &d, t)?;
            let after = sample_at(&reference.trajectory, &d, t + ctx.pulse.period())?;
            Some((before, after))
        });
        Ok(SweepEntry {
            derived,
            reference,
            doublon_at_threshold,
        })
    })
}

pub fn spline_of(tr: &Trajectory, values: Vec<f64>) -> AppResult<CubicSpline> {
    Ok(CubicSpline::new(tr.records[0].time, tr.dt(), values)?)
}

/// Tracks the reference current of `source` in the system `tracked`. With
/// `scaled`, the configured a- or k-scaling is applied.
pub fn mimic(
    ctx: &Context,
    tracked: &GroundState,
    source: &ReferenceRun,
    scaled: bool,
    grid: &TimeGrid,
) -> AppResult<TrackedRun> {
    let t = &ctx.cfg.tracking;
    let a = ctx.cfg.lattice.a;
    let target = spline_of(&source.trajectory, source.trajectory.currents())?;
    let mut tcfg = ctx.cfg.tracking();
    let mut halvings_left = 0;
    if scaled {
        match t.mode {
            ScaleMode::AScale => tcfg.lattice_constant = Some(t.lattice_scale * a),
            ScaleMode::KScale => {
                let scaling = TargetScaling {
                    two_a_t0: 2.0 * a * ctx.cfg.lattice.t0,
                    r_floor: t.k_safety * tracked.hop.r,
                    epsilon1: tcfg.epsilon1,
                    allow_amplification: false,
                };
                let (k, _) = scale_target(target.samples(), &scaling)?;
                tcfg.scale = Some(k);
                halvings_left = t.max_halvings;
            }
        }
    }
    let mut halvings = 0;
    loop {
        log::info!(
            "tracking U = {} t0 current in U = {} t0 system (k = {}, a = {} Å)",
            source.u_over_t0,
            tracked.u_over_t0,
            tcfg.target_scale(),
            tcfg.effective_a(tracked.model.spec())
        );
        match evolve_tracking(&tracked.psi, &tracked.model, |s| target.eval(s), grid, &tcfg) {
            Ok(trajectory) => {
                let spectrum = ctx.spectrum(&trajectory)?;
                return Ok(TrackedRun {
                    u_over_t0: tracked.u_over_t0,
                    source_u_over_t0: source.u_over_t0,
                    tracking: tcfg,
                    a_eff: tcfg.effective_a(tracked.model.spec()),
                    scale: tcfg.target_scale(),
                    halvings,
                    trajectory,
                    spectrum,
                });
            }
            Err(e @ Error::ConstraintViolation { .. }) if halvings < halvings_left => {
                log::warn!("{e}; halving k");
                tcfg.scale = Some(tcfg.target_scale() / 2.0);
                halvings += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mimicry {
    pub source: ReferenceRun,
    pub target: ReferenceRun,
    /// Target-U system tracking the source current (scaled).
    pub forward: TrackedRun,
    /// Source-U system tracking the target current (unscaled).
    pub reverse: Option<TrackedRun>,
    pub source_ground: GroundState,
    pub target_ground: GroundState,
}

pub fn run_mimicry(ctx: &Context) -> AppResult<Mimicry> {
    let t = &ctx.cfg.tracking;
    let mut refs = par_map(ctx.jobs(), &[t.source_u_over_t0, t.target_u_over_t0], |&u| {
        ctx.reference(u)
    })?;
    let (target_ground, target) = refs.pop().unwrap();
    let (source_ground, source) = refs.pop().unwrap();
    let directions: Vec<bool> = if t.reverse { vec![true, false] } else { vec![true] };
    let mut runs = par_map(ctx.jobs(), &directions, |&forward| {
        if forward {
            mimic(ctx, &target_ground, &source, true, &ctx.grid)
        } else {
            mimic(ctx, &source_ground, &target, false, &ctx.grid)
        }
    })?;
    let reverse = if t.reverse { runs.pop() } else { None };
    let forward = runs.pop().unwrap();
    Ok(Mimicry {
        source,
        target,
        forward,
        reverse,
        source_ground,
        target_ground,
    })
}

/// Thresholds for the doublon contrast between tracked and reference runs.
pub const MIN_DOUBLON_RATIO: f64 = 2.0;
pub const MAX_CONDUCTOR_DEVIATION: f64 = 0.25;
/// Relative round-off floor for the source-U variation: at U = 0 and half
/// filling D is exactly 1/4 under any uniform field, so its peak-to-peak is
/// pure rounding.
pub const DEVIATION_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct DoublonContrast {
    pub source_u_over_t0: f64,
    pub target_u_over_t0: f64,
    /// Mean D over the final three cycles, tracked and reference, in the target-U system.
    pub mean_tracked_last_cycles: f64,
    pub mean_reference_last_cycles: f64,
    pub ratio: f64,
    pub min_ratio: f64,
    /// max |D_T − D| and the peak-to-peak of D in the source-U system.
    pub source_max_deviation: Option<f64>,
    pub source_peak_to_peak: Option<f64>,
    /// max |D_T − D| / max(peak-to-peak, floor · mean D).
    pub source_relative_deviation: Option<f64>,
    pub max_relative_deviation: f64,
    pub deviation_floor: f64,
    /// First time |dΦ_T/dt| of the forward run reaches Δ/2ξ at the target U.
    pub breakdown_time_natural: Option<f64>,
    pub breakdown_time_fs: Option<f64>,
    /// Same criterion applied to the reference pulse.
    pub reference_t_th_natural: Option<f64>,
}

fn mean_after(tr: &Trajectory, t_from: f64) -> f64 {
    let (sum, n) = tr
        .records
        .iter()
        .filter(|r| r.time >= t_from)
        .fold((0.0, 0usize), |(s, n), r| (s + r.doublon, n + 1));
    sum / n as f64
}

pub fn doublon_contrast(ctx: &Context, m: &Mimicry) -> AppResult<DoublonContrast> {
    let t_from = ctx.pulse.duration() - 3.0 * ctx.pulse.period();
    let tracked = mean_after(&m.forward.trajectory, t_from);
    let reference = mean_after(&m.target.trajectory, t_from);
    let (dev, ptp, scale) = match &m.reverse {
        Some(rev) => {
            let d_ref = m.source.trajectory.doublons();
            let dev = rev
                .trajectory
                .doublons()
                .iter()
                .zip(&d_ref)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let hi = d_ref.iter().copied().fold(f64::MIN, f64::max);
            let lo = d_ref.iter().copied().fold(f64::MAX, f64::min);
            let mean = d_ref.iter().sum::<f64>() / d_ref.len() as f64;
            (Some(dev), Some(hi - lo), Some((hi - lo).max(DEVIATION_FLOOR * mean)))
        }
        None => (None, None, None),
    };
    let target_u = m.forward.u_over_t0;
    let breakdown = if target_u > 0.0 {
        let inputs = BreakdownInputs::for_interaction(target_u * ctx.cfg.lattice.t0, ctx.cfg.lattice.t0)?;
        first_threshold_crossing(
            &m.forward.trajectory.times(),
            &m.forward.trajectory.unwrapped_phases(),
            &inputs,
        )
    } else {
        None
    };
    Ok(DoublonContrast {
        source_u_over_t0: m.source.u_over_t0,
        target_u_over_t0: target_u,
        mean_tracked_last_cycles: tracked,
        mean_reference_last_cycles: reference,
        ratio: tracked / reference,
        min_ratio: MIN_DOUBLON_RATIO,
        source_max_deviation: dev,
        source_peak_to_peak: ptp,
        source_relative_deviation: dev.zip(scale).map(|(d, s)| d / s),
        max_relative_deviation: MAX_CONDUCTOR_DEVIATION,
        deviation_floor: DEVIATION_FLOOR,
        breakdown_time_natural: breakdown,
        breakdown_time_fs: breakdown.map(natural_time_to_fs),
        reference_t_th_natural: ctx.derived(target_u)?.t_th_natural,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub dt: f64,
    /// max_t |⟨J⟩_driven − k J_T| / max_t |k J_T|.
    pub max_relative_deviation: f64,
    /// |⟨ψ_track|ψ_driven⟩|² at the end of the pulse.
    pub fidelity: f64,
}

/// Re-propagates the recorded (unwrapped) tracking field with the physical
/// Hamiltonian and compares the result with the tracked run.
pub fn round_trip(
    tracked_ground: &GroundState,
    run: &TrackedRun,
    source: &ReferenceRun,
) -> AppResult<(RoundTripReport, Trajectory)> {
    let grid = run.grid()?;
    let target = spline_of(&source.trajectory, source.trajectory.currents())?;
    let field = spline_of(&run.trajectory, run.trajectory.unwrapped_phases())?;
    let model = tracked_ground.model.with_lattice_constant(run.a_eff)?;
    let driven = evolve_driven(&tracked_ground.psi, &model, |t| field.eval(t), &grid)?;
    let peak = driven
        .records
        .iter()
        .map(|r| (run.scale * target.eval(r.time)).abs())
        .fold(0.0, f64::max);
    let dev = driven
        .records
        .iter()
        .map(|r| (r.current - run.scale * target.eval(r.time)).abs())
        .fold(0.0, f64::max);
    let report = RoundTripReport {
        dt: grid.dt(),
        max_relative_deviation: dev / peak,
        fidelity: run.trajectory.final_state.fidelity(&driven.final_state),
    };
    Ok((report, driven))
}

#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub mimicry_source: ReferenceRun,
    pub tracked: TrackedRun,
    pub driven: Trajectory,
    pub report: RoundTripReport,
    pub refined: Option<RoundTripReport>,
}

impl RoundTrip {
    /// Observed convergence order of the deviation under step halving.
    pub fn order(&self) -> Option<f64> {
        self.refined
            .as_ref()
            .map(|r| (self.report.max_relative_deviation / r.max_relative_deviation).log2())
    }
}

/// Forward mimicry direction followed by re-propagation of its field.
pub fn run_round_trip(ctx: &Context) -> AppResult<RoundTrip> {
    let t = &ctx.cfg.tracking;
    let mut refs = par_map(ctx.jobs(), &[t.source_u_over_t0, t.target_u_over_t0], |&u| {
        if u == t.source_u_over_t0 {
            let (g, r) = ctx.reference(u)?;
            Ok((g, Some(r)))
        } else {
            Ok((ctx.ground(u)?, None))
        }
    })?;
    let (tracked_ground, _) = refs.pop().unwrap();
    let (_, source) = refs.pop().unwrap();
    let source = source.expect("source reference computed");
    round_trip_direction(ctx, &tracked_ground, source, true)
}

pub fn round_trip_direction(
    ctx: &Context,
    tracked_ground: &GroundState,
    source: ReferenceRun,
    scaled: bool,
) -> AppResult<RoundTrip> {
    let tracked = mimic(ctx, tracked_ground, &source, scaled, &ctx.grid)?;
    let (report, driven) = round_trip(tracked_ground, &tracked, &source)?;
    log::info!("round trip at dt = {:.5}: {report:?}", report.dt);
    let refined = if ctx.cfg.round_trip.refine {
        let fine = ctx.refined(2)?;
        let run = mimic(&fine, tracked_ground, &source, scaled, &fine.grid)?;
        let (r, _) = round_trip(tracked_ground, &run, &source)?;
        log::info!("round trip at dt = {:.5}: {r:?}", r.dt);
        Some(r)
    } else {
        None
    };
    Ok(RoundTrip {
        mimicry_source: source,
        tracked,
        driven,
        report,
        refined,
    })
}

#[derive(Debug, Clone)]
pub struct BoostedRun {
    pub u_over_t0: f64,
    pub trajectory: Trajectory,
    pub spectrum: Spectrum,
    /// Boosted-harmonic peak over first-harmonic peak, in dB.
    pub harmonic_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldDistance {
    pub u_a: f64,
    pub u_b: f64,
    /// ‖Φ_a − Φ_b‖ / max(‖Φ_a‖, ‖Φ_b‖) over the pulse (unwrapped phases).
    pub normalized_l2: f64,
}

#[derive(Debug, Clone)]
pub struct HarmonicBoost {
    pub source: ReferenceRun,
    pub target_times: Vec<f64>,
    pub target_samples: Vec<f64>,
    pub target_spectrum: Spectrum,
    pub target_harmonic_db: f64,
    pub gain: f64,
    pub scale: f64,
    pub halvings: u32,
    pub runs: Vec<BoostedRun>,
    pub distances: Vec<FieldDistance>,
}

pub fn harmonic_db(s: &Spectrum, harmonic: f64) -> f64 {
    10.0 * (s.peak(harmonic - 0.5, harmonic + 0.5) / s.peak(0.5, 1.5)).log10()
}

pub fn field_distance(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b))
}

pub fn run_harmonic_boost(ctx: &Context) -> AppResult<HarmonicBoost> {
    let b = &ctx.cfg.boost;
    let (_, source) = ctx.reference(b.source_u_over_t0)?;
    let grounds = par_map(ctx.jobs(), &b.u_over_t0, |&u| ctx.ground(u))?;
    let r_min = grounds.iter().map(|g| g.hop.r).fold(f64::INFINITY, f64::min);
    let omega = ctx.pulse.omega();
    let times = source.trajectory.times();
    let boosted = boosted_target_current(
        &times,
        &source.trajectory.currents(),
        omega,
        &BoostSpec {
            harmonic: b.harmonic,
            ratio: b.ratio,
        },
        &TargetScaling {
            two_a_t0: 2.0 * ctx.cfg.lattice.a * ctx.cfg.lattice.t0,
            r_floor: b.r_safety * r_min,
            epsilon1: ctx.cfg.numerics.epsilon1,
            allow_amplification: false,
        },
    )?;
    let target_spectrum = current_spectrum(&times, &boosted.samples, omega)?;
    let tcfg = ctx.cfg.tracking();
    let mut factor = 1.0;
    let mut halvings = 0;
    let runs = loop {
        let attempt = par_map(ctx.jobs(), &grounds, |g| {
            log::info!(
                "tracking boosted current in U = {} t0 system (k = {})",
                g.u_over_t0,
                boosted.scale * factor
            );
            let trajectory = evolve_tracking(&g.psi, &g.model, |t| factor * boosted.eval(t), &ctx.grid, &tcfg)?;
            let spectrum = ctx.spectrum(&trajectory)?;
            Ok(BoostedRun {
                u_over_t0: g.u_over_t0,
                harmonic_db: harmonic_db(&spectrum, b.harmonic),
                trajectory,
                spectrum,
            })
        });
        match attempt {
            Err(AppError::Model(e @ Error::ConstraintViolation { .. })) if halvings < b.max_halvings => {
                log::warn!("{e}; halving the boosted target");
                factor /= 2.0;
                halvings += 1;
            }
            other => break other?,
        }
    };
    let mut distances = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            distances.push(FieldDistance {
                u_a: runs[i].u_over_t0,
                u_b: runs[j].u_over_t0,
                normalized_l2: field_distance(
                    &runs[i].trajectory.unwrapped_phases(),
                    &runs[j].trajectory.unwrapped_phases(),
                ),
            });
        }
    }
    Ok(HarmonicBoost {
        target_harmonic_db: harmonic_db(&target_spectrum, b.harmonic),
        target_samples: boosted.samples.iter().map(|v| factor * v).collect(),
        target_times: times,
        target_spectrum,
        gain: boosted.gain,
        scale: boosted.scale * factor,
        halvings,
        source,
        runs,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order_and_reports_first_error() {
        let items: Vec<usize> = (0..17).collect();
        let out = par_map(4, &items, |&i| Ok(i * i)).unwrap();
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
        let err = par_map(3, &items, |&i| {
            if i % 5 == 4 {
                Err(AppError::Config(format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert!(matches!(err, Err(AppError::Config(m)) if m == "4"));
    }

    #[test]
    fn field_distance_is_relative() {
        assert_eq!(field_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((field_distance(&[1.0, 0.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
