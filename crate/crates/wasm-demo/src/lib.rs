//! Browser demo: pulse and breakdown threshold, a small driven chain with its
//! harmonic spectrum, and current mimicry between two interaction strengths.
//!
//! Each operation is a plain Rust function returning a serialisable struct;
//! the `#[wasm_bindgen]` wrappers only convert to JavaScript values.

use hubbard_tracking::pulses::{breakdown_threshold, electric_field, reference_phase, threshold_time};
use hubbard_tracking::spectra::{current_spectrum, Spectrum};
use hubbard_tracking::spline::CubicSpline;
use hubbard_tracking::units::{natural_time_to_fs, FrequencyConvention};
use hubbard_tracking::{
    evolve_driven, evolve_tracking, ground_state, BreakdownInputs, HubbardModel, LanczosConfig, LatticeSpec,
    ManyBodyState, PulseSpec, TimeGrid, TrackingConfig, Trajectory,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const T0: f64 = 0.52;
const A: f64 = 4.0;
const FREQUENCY_THZ: f64 = 32.9;
/// Largest chain the page will attempt (dimension 4900 at half filling).
pub const MAX_SITES: usize = 8;
const MAX_ORDER: f64 = 40.0;
const PLOT_POINTS: usize = 800;

fn pulse(e0: f64, cycles: u32) -> PulseSpec {
    PulseSpec {
        e0,
        frequency_thz: FREQUENCY_THZ,
        cycles,
        a: A,
        convention: FrequencyConvention::Linear,
    }
}

fn check_sites(sites: usize) -> Result<(), String> {
    if (2..=MAX_SITES).contains(&sites) {
        Ok(())
    } else {
        Err(format!("chain length must lie in 2..={MAX_SITES}, got {sites}"))
    }
}

fn stride(n: usize) -> usize {
    n.div_ceil(PLOT_POINTS).max(1)
}

fn thin(v: &[f64]) -> Vec<f64> {
    v.iter().step_by(stride(v.len())).copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumData {
    pub order: Vec<f64>,
    pub log10_power: Vec<f64>,
}

fn spectrum_data(s: &Spectrum) -> SpectrumData {
    let floor = s.power.iter().copied().fold(0.0, f64::max) * 1e-16;
    let (order, log10_power) = s
        .orders
        .iter()
        .zip(&s.power)
        .take_while(|(o, _)| **o <= MAX_ORDER)
        .map(|(o, p)| (*o, p.max(floor).max(f64::MIN_POSITIVE).log10()))
        .unzip();
    SpectrumData { order, log10_power }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdCurve {
    pub t_fs: Vec<f64>,
    /// |E(t)| in MV/cm.
    pub field: Vec<f64>,
    pub e_th: f64,
    pub gap_ev: f64,
    pub correlation_length: f64,
    /// Predicted breakdown time, if the pulse reaches the threshold.
    pub t_th_fs: Option<f64>,
}

/// Reference pulse envelope against the breakdown threshold for `U/t0`.
pub fn threshold_curve_data(e0: f64, u_over_t0: f64, cycles: u32) -> Result<ThresholdCurve, String> {
    let p = pulse(e0, cycles);
    p.validate().map_err(|e| e.to_string())?;
    let inputs = BreakdownInputs::for_interaction(u_over_t0 * T0, T0).map_err(|e| e.to_string())?;
    let n = PLOT_POINTS;
    let ts: Vec<f64> = (0..=n).map(|i| p.duration() * i as f64 / n as f64).collect();
    Ok(ThresholdCurve {
        t_fs: ts.iter().map(|&t| natural_time_to_fs(t)).collect(),
        field: ts.iter().map(|&t| electric_field(t, &p).abs()).collect(),
        e_th: breakdown_threshold(&inputs, A),
        gap_ev: inputs.gap,
        correlation_length: inputs.correlation_length,
        t_th_fs: threshold_time(&p, &inputs).map(natural_time_to_fs),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DrivenRun {
    pub t_fs: Vec<f64>,
    pub phi: Vec<f64>,
    pub current: Vec<f64>,
    pub doublon: Vec<f64>,
    pub spectrum: SpectrumData,
    pub ground_energy: f64,
}

fn prepare(sites: usize, u_over_t0: f64) -> Result<(HubbardModel, f64, ManyBodyState), String> {
    check_sites(sites)?;
    let model = HubbardModel::new(LatticeSpec::half_filled(sites, T0, u_over_t0 * T0, A)).map_err(|e| e.to_string())?;
    let (e, psi) = ground_state(&model.hamiltonian_at(0.0), &LanczosConfig::default()).map_err(|e| e.to_string())?;
    Ok((model, e, psi))
}

fn grid(p: &PulseSpec, steps_per_cycle: usize) -> Result<TimeGrid, String> {
    TimeGrid::cycles(p.period(), p.cycles, steps_per_cycle).map_err(|e| e.to_string())
}

fn fs_axis(tr: &Trajectory) -> Vec<f64> {
    thin(&tr.times()).into_iter().map(natural_time_to_fs).collect()
}

fn spectrum_of(tr: &Trajectory, omega: f64) -> Result<SpectrumData, String> {
    current_spectrum(&tr.times(), &tr.currents(), omega)
        .map(|s| spectrum_data(&s))
        .map_err(|e| e.to_string())
}

/// Ground state of a short chain driven by the reference pulse.
pub fn driven_run_data(
    sites: usize,
    u_over_t0: f64,
    e0: f64,
    cycles: u32,
    steps_per_cycle: usize,
) -> Result<DrivenRun, String> {
    let p = pulse(e0, cycles);
    p.validate().map_err(|e| e.to_string())?;
    let (model, energy, psi) = prepare(sites, u_over_t0)?;
    let tr = evolve_driven(&psi, &model, |t| reference_phase(t, &p), &grid(&p, steps_per_cycle)?)
        .map_err(|e| e.to_string())?;
    Ok(DrivenRun {
        t_fs: fs_axis(&tr),
        phi: thin(&tr.phases()),
        current: thin(&tr.currents()),
        doublon: thin(&tr.doublons()),
        spectrum: spectrum_of(&tr, p.omega())?,
        ground_energy: energy,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MimicryRun {
    pub t_fs: Vec<f64>,
    /// Reference field and current of the source system.
    pub phi_source: Vec<f64>,
    pub current_source: Vec<f64>,
    /// Tracking field and (rescaled) current of the tracking system.
    pub phi_tracked: Vec<f64>,
    pub current_tracked: Vec<f64>,
    pub doublon_tracked: Vec<f64>,
    pub spectrum_source: SpectrumData,
    pub spectrum_tracked: SpectrumData,
}

/// The `target` system tracks the current the `source` system produces under
/// the reference pulse, with its lattice constant scaled by `lattice_scale`.
pub fn mimicry_run_data(
    sites: usize,
    source_u_over_t0: f64,
    target_u_over_t0: f64,
    lattice_scale: f64,
    cycles: u32,
    steps_per_cycle: usize,
) -> Result<MimicryRun, String> {
    let p = pulse(10.0, cycles);
    let g = grid(&p, steps_per_cycle)?;
    let (m_src, _, psi_src) = prepare(sites, source_u_over_t0)?;
    let (m_tgt, _, psi_tgt) = prepare(sites, target_u_over_t0)?;
    let source = evolve_driven(&psi_src, &m_src, |t| reference_phase(t, &p), &g).map_err(|e| e.to_string())?;
    let target = CubicSpline::new(0.0, g.dt(), source.currents()).map_err(|e| e.to_string())?;
    let cfg = TrackingConfig {
        lattice_constant: Some(lattice_scale * A),
        ..TrackingConfig::default()
    };
    let tracked = evolve_tracking(&psi_tgt, &m_tgt, |t| target.eval(t), &g, &cfg).map_err(|e| e.to_string())?;
    Ok(MimicryRun {
        t_fs: fs_axis(&source),
        phi_source: thin(&source.phases()),
        current_source: thin(&source.currents()),
        phi_tracked: thin(&tracked.unwrapped_phases()),
        current_tracked: thin(&tracked.currents()),
        doublon_tracked: thin(&tracked.doublons()),
        spectrum_source: spectrum_of(&source, p.omega())?,
        spectrum_tracked: spectrum_of(&tracked, p.omega())?,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<JsValue, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_wasm_bindgen::to_value(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn threshold_curve(e0: f64, u_over_t0: f64, cycles: u32) -> Result<JsValue, JsError> {
    to_js(threshold_curve_data(e0, u_over_t0, cycles))
}

#[wasm_bindgen]
pub fn driven_run(
    sites: usize,
    u_over_t0: f64,
    e0: f64,
    cycles: u32,
    steps_per_cycle: usize,
) -> Result<JsValue, JsError> {
    to_js(driven_run_data(sites, u_over_t0, e0, cycles, steps_per_cycle))
}

#[wasm_bindgen]
pub fn mimicry_run(
    sites: usize,
    source_u_over_t0: f64,
    target_u_over_t0: f64,
    lattice_scale: f64,
    cycles: u32,
    steps_per_cycle: usize,
) -> Result<JsValue, JsError> {
    to_js(mimicry_run_data(
        sites,
        source_u_over_t0,
        target_u_over_t0,
        lattice_scale,
        cycles,
        steps_per_cycle,
    ))
}
