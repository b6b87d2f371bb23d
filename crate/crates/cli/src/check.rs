//! Invariant suite on a small chain: exercises both tracking directions of
//! the mimicry scenario and checks the structural identities of the method.

use std::time::Instant;

use hubbard_tracking::dense::evolve_tracking_dense;
use hubbard_tracking::observables::{commutator_expectations, current_operator, HopExpectation};
use hubbard_tracking::tracking::{build_tracking_hamiltonian, tracking_step};
use hubbard_tracking::{evolve_tracking, TimeGrid, Trajectory};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::Config;
use crate::scenarios::{run_mimicry, spline_of, AppResult, Context, GroundState, TrackedRun};

pub const CHECK_SITES: usize = 6;
pub const TIME_BUDGET_S: f64 = 120.0;
/// Hamiltonians are sampled every this many steps along each tracked run.
const SAMPLE_STRIDE: usize = 250;

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
    pub elapsed_s: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }
}

fn below(name: &'static str, value: f64, bound: f64) -> CheckItem {
    CheckItem {
        name,
        value,
        bound,
        pass: value < bound,
    }
}

/// The configuration with the chain shrunk to the check size at half filling.
pub fn check_config(cfg: &Config) -> Config {
    let mut c = cfg.clone();
    c.lattice.sites = CHECK_SITES;
    c.lattice.n_up = None;
    c.lattice.n_down = None;
    c
}

fn norm_defect(tr: &Trajectory) -> f64 {
    let step = tr.records.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
    step.max((tr.final_state.norm() - 1.0).abs())
}

fn current_ratio(tr: &Trajectory, t0: f64, a: f64) -> f64 {
    tr.records
        .iter()
        .map(|r| r.current.abs() / (2.0 * a * t0 * r.r))
        .fold(0.0, f64::max)
}

#[derive(Default)]
struct Identities {
    hermiticity: f64,
    equivalence: f64,
    p_modulus: f64,
}

/// Rebuilds H_T from recorded (J, R, θ) samples and compares it with H(Φ_T).
fn tracking_identities(ctx: &Context, ground: &GroundState, run: &TrackedRun, acc: &mut Identities) -> AppResult<()> {
    let model = &ground.model;
    let spec = model.spec();
    for rec in run.trajectory.records.iter().step_by(SAMPLE_STRIDE) {
        let hop = HopExpectation::from_value(Complex64::from_polar(rec.r, rec.theta));
        let step = tracking_step(rec.current, hop, spec.t0, run.a_eff, &ctx.cfg.tracking())?;
        let h_t = build_tracking_hamiltonian(model.hop_forward(), model.doublon(), spec, &step)?;
        acc.hermiticity = acc.hermiticity.max(h_t.hermiticity_defect());
        acc.equivalence = acc
            .equivalence
            .max(h_t.max_abs_difference(&model.hamiltonian(step.phi)?)?);
        let p = (step.p_plus.norm() - spec.t0)
            .abs()
            .max((step.p_minus.norm() - spec.t0).abs());
        acc.p_modulus = acc.p_modulus.max(p);
    }
    Ok(())
}

fn b_imaginary(ground: &GroundState, tr: &Trajectory) -> AppResult<f64> {
    let model = &ground.model;
    let last = tr.records.last().expect("non-empty trajectory");
    let j = current_operator(model.hop_forward(), model.spec(), last.phi)?;
    let mut worst = 0.0f64;
    for o in [model.doublon(), &j] {
        let c = commutator_expectations(&tr.final_state, model.hop_forward(), model.doublon(), o, model.spec())?;
        worst = worst.max(c.b_imaginary.abs());
    }
    Ok(worst)
}

pub fn run_check(cfg: &Config) -> AppResult<CheckReport> {
    let start = Instant::now();
    let ctx = Context::new(check_config(cfg))?;
    let m = run_mimicry(&ctx)?;
    let t0 = ctx.cfg.lattice.t0;
    let a = ctx.cfg.lattice.a;

    let mut tracked = vec![(&m.target_ground, &m.forward)];
    if let Some(r) = &m.reverse {
        tracked.push((&m.source_ground, r));
    }

    let mut norm = norm_defect(&m.source.trajectory).max(norm_defect(&m.target.trajectory));
    let mut ratio = current_ratio(&m.source.trajectory, t0, a).max(current_ratio(&m.target.trajectory, t0, a));
    let mut ids = Identities::default();
    let mut b_im =
        b_imaginary(&m.source_ground, &m.source.trajectory)?.max(b_imaginary(&m.target_ground, &m.target.trajectory)?);
    for (ground, run) in &tracked {
        norm = norm.max(norm_defect(&run.trajectory));
        ratio = ratio.max(current_ratio(&run.trajectory, t0, run.a_eff));
        tracking_identities(&ctx, ground, run, &mut ids)?;
        b_im = b_im.max(b_imaginary(ground, &run.trajectory)?);
    }

    // dense oracle over the first cycle of the forward direction
    let grid = TimeGrid::cycles(ctx.pulse.period(), 1, ctx.cfg.numerics.steps_per_cycle)?;
    let target = spline_of(&m.source.trajectory, m.source.trajectory.currents())?;
    let tcfg = m.forward.tracking;
    let sparse = evolve_tracking(
        &m.target_ground.psi,
        &m.target_ground.model,
        |t| target.eval(t),
        &grid,
        &tcfg,
    )?;
    let dense = evolve_tracking_dense(
        &m.target_ground.psi,
        &m.target_ground.model,
        |t| target.eval(t),
        &grid,
        &tcfg,
    )?;
    let oracle = sparse
        .final_state
        .amplitudes()
        .iter()
        .zip(dense.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();

    let elapsed = start.elapsed().as_secs_f64();
    let items = vec![
        below("norm conservation |‖ψ‖ − 1|", norm, 1e-8),
        below("Hermiticity of H_T", ids.hermiticity, 1e-14),
        below("H_T − H(Φ_T)", ids.equivalence, 1e-13),
        below("||P±| − t0| (eV)", ids.p_modulus, 1e-14),
        CheckItem {
            name: "max |⟨J⟩| / 2at0R",
            value: ratio,
            bound: 1.0,
            pass: ratio <= 1.0 + 1e-12,
        },
        below("|Im B| (eV)", b_im, 1e-12),
        below("dense oracle ‖ψ_sparse − ψ_dense‖", oracle, 1e-10),
        below("runtime (s)", elapsed, TIME_BUDGET_S),
    ];
    Ok(CheckReport {
        items,
        elapsed_s: elapsed,
    })
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in &self.items {
            let tag = if i.pass { "PASS" } else { "FAIL" };
            writeln!(f, "{tag}  {:<36} {:>12.3e}  (bound {:e})", i.name, i.value, i.bound)?;
        }
        write!(
            f,
            "{} in {:.1} s",
            if self.passed() {
                "all invariants hold"
            } else {
                "invariant check FAILED"
            },
            self.elapsed_s
        )
    }
}
