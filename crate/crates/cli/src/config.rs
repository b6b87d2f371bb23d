//! Experiment configuration: TOML file with every field defaulted to the
//! reference parameter set, overridable from the command line.

use std::path::{Path, PathBuf};

use hubbard_tracking::units::FrequencyConvention;
use hubbard_tracking::{LanczosConfig, LatticeSpec, PulseSpec, TrackingConfig};
use serde::{Deserialize, Serialize};

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Reference,
    DoublonSweep,
    Mimicry,
    DoublonTracking,
    HarmonicBoost,
    RoundTrip,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Reference => "reference",
            Scenario::DoublonSweep => "doublon-sweep",
            Scenario::Mimicry => "mimicry",
            Scenario::DoublonTracking => "doublon-tracking",
            Scenario::HarmonicBoost => "harmonic-boost",
            Scenario::RoundTrip => "round-trip",
        }
    }
}

/// How the forward mimicry target is made feasible for the tracked system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// Track with a lattice constant `lattice_scale · a`.
    AScale,
    /// Multiply the target by `k ≤ 1` chosen against a hopping floor.
    KScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: Option<Scenario>,
    pub output_dir: PathBuf,
    pub lattice: LatticeConfig,
    pub pulse: PulseConfig,
    pub numerics: NumericsConfig,
    pub tracking: TrackingBlock,
    pub sweep: SweepConfig,
    pub boost: BoostConfig,
    pub round_trip: RoundTripConfig,
    pub output: OutputConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scenario: None,
            output_dir: PathBuf::from("out"),
            lattice: LatticeConfig::default(),
            pulse: PulseConfig::default(),
            numerics: NumericsConfig::default(),
            tracking: TrackingBlock::default(),
            sweep: SweepConfig::default(),
            boost: BoostConfig::default(),
            round_trip: RoundTripConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub sites: usize,
    /// Defaults to half filling.
    pub n_up: Option<usize>,
    pub n_down: Option<usize>,
    /// Hopping t0 in eV.
    pub t0: f64,
    /// Interaction strengths in units of t0 for the reference scenario.
    pub u_over_t0: Vec<f64>,
    /// Lattice constant in Å.
    pub a: f64,
    pub periodic: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            sites: 10,
            n_up: None,
            n_down: None,
            t0: 0.52,
            u_over_t0: vec![0.0, 7.0],
            a: 4.0,
            periodic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    /// Peak field in MV/cm.
    pub e0: f64,
    pub frequency_thz: f64,
    pub convention: FrequencyConvention,
    pub cycles: u32,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            e0: 10.0,
            frequency_thz: 32.9,
            convention: FrequencyConvention::Linear,
            cycles: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub steps_per_cycle: usize,
    /// Lanczos residual tolerance in eV.
    pub lanczos_tolerance: f64,
    pub lanczos_krylov: usize,
    pub lanczos_restarts: usize,
    pub seed: u64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// Worker threads for independent runs; 0 uses all cores.
    pub jobs: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let lanczos = LanczosConfig::default();
        let tracking = TrackingConfig::default();
        Self {
            steps_per_cycle: 2000,
            lanczos_tolerance: lanczos.tolerance,
            lanczos_krylov: lanczos.max_krylov,
            lanczos_restarts: lanczos.max_restarts,
            seed: lanczos.seed,
            epsilon1: tracking.epsilon1,
            epsilon2: tracking.epsilon2,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingBlock {
    /// System whose reference current is imitated.
    pub source_u_over_t0: f64,
    /// System that is driven to imitate it (forward direction).
    pub target_u_over_t0: f64,
    pub mode: ScaleMode,
    /// `a_T / a` in a-scale mode.
    pub lattice_scale: f64,
    /// Hopping floor `R_floor = k_safety · R(ψ0)` in k-scale mode.
    pub k_safety: f64,
    /// Halvings of `k` tried after a constraint violation in k-scale mode.
    pub max_halvings: u32,
    /// Also run the reverse direction (source system tracks the target's current, unscaled).
    pub reverse: bool,
}

impl Default for TrackingBlock {
    fn default() -> Self {
        Self {
            source_u_over_t0: 0.0,
            target_u_over_t0: 7.0,
            mode: ScaleMode::AScale,
            lattice_scale: 60.0,
            k_safety: 0.5,
            max_halvings: 6,
            reverse: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub u_over_t0: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            u_over_t0: (0..=10).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    /// Reference system whose current is boosted.
    pub source_u_over_t0: f64,
    /// Systems that track the boosted current.
    pub u_over_t0: Vec<f64>,
    pub harmonic: f64,
    /// Boosted-harmonic peak power relative to the first harmonic.
    pub ratio: f64,
    /// Hopping floor `R_floor = r_safety · min_U R(ψ0)` for the common target scale.
    pub r_safety: f64,
    pub max_halvings: u32,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            source_u_over_t0: 0.0,
            u_over_t0: vec![0.0, 7.0],
            harmonic: 9.0,
            ratio: 1.0,
            r_safety: 0.5,
            max_halvings: 6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundTripConfig {
    /// Repeat tracking and re-propagation at half the step to measure the order.
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub plots: bool,
    /// Highest harmonic order written to spectrum files.
    pub max_harmonic: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            plots: false,
            max_harmonic: 60.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), AppError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(AppError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative_list(name: &str, v: &[f64]) -> Result<(), AppError> {
    if v.is_empty() {
        return Err(AppError::Config(format!("{name} must not be empty")));
    }
    match v.iter().find(|u| !(**u >= 0.0 && u.is_finite())) {
        Some(u) => Err(AppError::Config(format!(
            "{name} entries must be non-negative, got {u}"
        ))),
        None => Ok(()),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let l = &self.lattice;
        if l.sites < 2 {
            return Err(AppError::Config(format!(
                "lattice.sites must be at least 2, got {}",
                l.sites
            )));
        }
        positive("lattice.t0", l.t0)?;
        positive("lattice.a", l.a)?;
        non_negative_list("lattice.u_over_t0", &l.u_over_t0)?;
        if !(self.pulse.e0 >= 0.0 && self.pulse.e0.is_finite()) {
            return Err(AppError::Config(format!(
                "pulse.e0 must be non-negative, got {}",
                self.pulse.e0
            )));
        }
        positive("pulse.frequency_thz", self.pulse.frequency_thz)?;
        if self.pulse.cycles == 0 {
            return Err(AppError::Config("pulse.cycles must be at least 1".into()));
        }
        let n = &self.numerics;
        if n.steps_per_cycle < 16 {
            return Err(AppError::Config(format!(
                "numerics.steps_per_cycle too small: {}",
                n.steps_per_cycle
            )));
        }
        positive("numerics.lanczos_tolerance", n.lanczos_tolerance)?;
        if !(n.epsilon1 > 0.0 && n.epsilon1 < 1.0) {
            return Err(AppError::Config(format!(
                "numerics.epsilon1 must lie in (0, 1), got {}",
                n.epsilon1
            )));
        }
        positive("numerics.epsilon2", n.epsilon2)?;
        let t = &self.tracking;
        non_negative_list("tracking U values", &[t.source_u_over_t0, t.target_u_over_t0])?;
        positive("tracking.lattice_scale", t.lattice_scale)?;
        positive("tracking.k_safety", t.k_safety)?;
        non_negative_list("sweep.u_over_t0", &self.sweep.u_over_t0)?;
        let b = &self.boost;
        non_negative_list("boost.u_over_t0", &b.u_over_t0)?;
        non_negative_list("boost.source_u_over_t0", &[b.source_u_over_t0])?;
        positive("boost.harmonic", b.harmonic)?;
        positive("boost.ratio", b.ratio)?;
        positive("boost.r_safety", b.r_safety)?;
        positive("output.max_harmonic", self.output.max_harmonic)?;
        for u in self.all_u() {
            self.lattice_spec(u)
                .validate()
                .map_err(|e| AppError::Config(e.to_string()))?;
        }
        self.pulse_spec()
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        self.lanczos().validate().map_err(|e| AppError::Config(e.to_string()))?;
        Ok(())
    }

    fn all_u(&self) -> Vec<f64> {
        let mut v = self.lattice.u_over_t0.clone();
        v.extend(&self.sweep.u_over_t0);
        v.extend(&self.boost.u_over_t0);
        v.extend([
            self.tracking.source_u_over_t0,
            self.tracking.target_u_over_t0,
            self.boost.source_u_over_t0,
        ]);
        v
    }

    pub fn lattice_spec(&self, u_over_t0: f64) -> LatticeSpec {
        let l = &self.lattice;
        let half = LatticeSpec::half_filled(l.sites, l.t0, u_over_t0 * l.t0, l.a);
        LatticeSpec {
            n_up: l.n_up.unwrap_or(half.n_up),
            n_down: l.n_down.unwrap_or(half.n_down),
            periodic: l.periodic,
            ..half
        }
    }

    pub fn pulse_spec(&self) -> PulseSpec {
        PulseSpec {
            e0: self.pulse.e0,
            frequency_thz: self.pulse.frequency_thz,
            cycles: self.pulse.cycles,
            a: self.lattice.a,
            convention: self.pulse.convention,
        }
    }

    pub fn lanczos(&self) -> LanczosConfig {
        LanczosConfig {
            max_krylov: self.numerics.lanczos_krylov,
            tolerance: self.numerics.lanczos_tolerance,
            max_restarts: self.numerics.lanczos_restarts,
            seed: self.numerics.seed,
        }
    }

    pub fn tracking(&self) -> TrackingConfig {
        TrackingConfig {
            epsilon1: self.numerics.epsilon1,
            epsilon2: self.numerics.epsilon2,
            scale: None,
            lattice_constant: None,
        }
    }

    pub fn jobs(&self) -> usize {
        match self.numerics.jobs {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            j => j,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        let back = Config::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let cfg = Config::from_toml("scenario = \"mimicry\"\n[lattice]\nsites = 6\n[tracking]\nmode = \"k-scale\"\n")
            .unwrap();
        assert_eq!(cfg.scenario, Some(Scenario::Mimicry));
        assert_eq!(cfg.lattice.sites, 6);
        assert_eq!(cfg.lattice.t0, 0.52);
        assert_eq!(cfg.tracking.mode, ScaleMode::KScale);
        let spec = cfg.lattice_spec(7.0);
        assert_eq!((spec.n_up, spec.n_down), (3, 3));
        assert!((spec.u - 3.64).abs() < 1e-12);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        assert!(matches!(
            Config::from_toml("[lattice]\nsites = \"ten\""),
            Err(AppError::Config(_))
        ));
        assert!(matches!(
            Config::from_toml("[lattice]\nbogus = 1"),
            Err(AppError::Config(_))
        ));
        let mut cfg = Config::default();
        cfg.lattice.t0 = -1.0;
        assert!(matches!(cfg.validate(), Err(AppError::Config(_))));
        let mut cfg = Config::default();
        cfg.lattice.n_up = Some(11);
        assert!(matches!(cfg.validate(), Err(AppError::Config(_))));
    }
}
