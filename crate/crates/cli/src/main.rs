use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hubbard_track_cli::check::run_check;
use hubbard_track_cli::config::{Config, ScaleMode, Scenario};
use hubbard_track_cli::output::{run, write};
use hubbard_track_cli::scenarios::Context;
use hubbard_track_cli::AppError;
use hubbard_tracking::units::FrequencyConvention;

/// Tracking control of the current in the laser-driven Hubbard chain.
#[derive(Parser)]
#[command(name = "hubbard-track", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Run the invariant suite on a 6-site chain and exit.
    #[arg(long)]
    check: bool,

    /// TOML configuration file; command-line flags override its fields.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Driven reference runs and their spectra for each lattice U.
    Reference,
    /// Doublon occupation versus U with predicted breakdown times.
    DoublonSweep,
    /// Each system of a U pair tracks the other's current.
    Mimicry,
    /// Mimicry plus the doublon contrast and breakdown time of the tracking field.
    DoublonTracking,
    /// Track a current with an amplified harmonic in several systems.
    HarmonicBoost,
    /// Re-propagate a tracking field with the physical Hamiltonian.
    RoundTrip,
    /// Invariant suite (same as --check).
    Check,
    /// Print the resolved configuration as TOML.
    Config,
}

fn parse_convention(s: &str) -> Result<FrequencyConvention, String> {
    match s {
        "linear" => Ok(FrequencyConvention::Linear),
        "angular" => Ok(FrequencyConvention::Angular),
        other => Err(format!("expected linear or angular, got {other}")),
    }
}

fn parse_mode(s: &str) -> Result<ScaleMode, String> {
    match s {
        "a-scale" => Ok(ScaleMode::AScale),
        "k-scale" => Ok(ScaleMode::KScale),
        other => Err(format!("expected a-scale or k-scale, got {other}")),
    }
}

#[derive(Args)]
struct Overrides {
    /// Directory for CSV, SVG and manifest files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Chain length L.
    #[arg(long, global = true)]
    sites: Option<usize>,
    /// Spin-up electrons (default L/2).
    #[arg(long, global = true)]
    n_up: Option<usize>,
    /// Spin-down electrons (default L/2).
    #[arg(long, global = true)]
    n_down: Option<usize>,
    /// Hopping in eV.
    #[arg(long, global = true)]
    t0: Option<f64>,
    /// Lattice constant in Å.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Comma-separated U/t0 values for the reference scenario.
    #[arg(long, global = true, value_delimiter = ',')]
    u: Option<Vec<f64>>,
    /// Peak field in MV/cm.
    #[arg(long, global = true)]
    e0: Option<f64>,
    /// Pulse frequency in THz.
    #[arg(long, global = true)]
    frequency_thz: Option<f64>,
    /// linear or angular reading of the frequency.
    #[arg(long, global = true, value_parser = parse_convention)]
    convention: Option<FrequencyConvention>,
    /// Pulse length in optical cycles.
    #[arg(long, global = true)]
    cycles: Option<u32>,
    /// RK4 steps per optical cycle.
    #[arg(long, global = true)]
    steps_per_cycle: Option<usize>,
    /// Seed of the Lanczos start vector.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Required margin of |X| below 1.
    #[arg(long, global = true)]
    epsilon1: Option<f64>,
    /// Required floor of R(ψ).
    #[arg(long, global = true)]
    epsilon2: Option<f64>,
    /// U/t0 of the system whose current is mimicked.
    #[arg(long, global = true)]
    source_u: Option<f64>,
    /// U/t0 of the tracking system.
    #[arg(long, global = true)]
    target_u: Option<f64>,
    /// a-scale or k-scale.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<ScaleMode>,
    /// a-scale: tracking lattice constant in units of a.
    #[arg(long, global = true)]
    lattice_scale: Option<f64>,
    /// k-scale: hopping floor as a fraction of the initial R.
    #[arg(long, global = true)]
    k_safety: Option<f64>,
    /// Skip the reverse mimicry direction.
    #[arg(long, global = true)]
    no_reverse: bool,
    /// Comma-separated U/t0 values for the doublon sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    sweep_u: Option<Vec<f64>>,
    /// Comma-separated U/t0 values of the boosted systems.
    #[arg(long, global = true, value_delimiter = ',')]
    boost_u: Option<Vec<f64>>,
    /// Harmonic order to amplify.
    #[arg(long, global = true)]
    harmonic: Option<f64>,
    /// Boosted peak power relative to the first harmonic.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Repeat the round trip at half the step.
    #[arg(long, global = true)]
    refine: bool,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Overrides {
    fn apply(self, cfg: &mut Config) {
        set(&mut cfg.output_dir, self.output_dir);
        set(&mut cfg.lattice.sites, self.sites);
        if self.n_up.is_some() {
            cfg.lattice.n_up = self.n_up;
        }
        if self.n_down.is_some() {
            cfg.lattice.n_down = self.n_down;
        }
        set(&mut cfg.lattice.t0, self.t0);
        set(&mut cfg.lattice.a, self.a);
        set(&mut cfg.lattice.u_over_t0, self.u);
        set(&mut cfg.pulse.e0, self.e0);
        set(&mut cfg.pulse.frequency_thz, self.frequency_thz);
        set(&mut cfg.pulse.convention, self.convention);
        set(&mut cfg.pulse.cycles, self.cycles);
        set(&mut cfg.numerics.steps_per_cycle, self.steps_per_cycle);
        set(&mut cfg.numerics.seed, self.seed);
        set(&mut cfg.numerics.jobs, self.jobs);
        set(&mut cfg.numerics.epsilon1, self.epsilon1);
        set(&mut cfg.numerics.epsilon2, self.epsilon2);
        set(&mut cfg.tracking.source_u_over_t0, self.source_u);
        set(&mut cfg.tracking.target_u_over_t0, self.target_u);
        set(&mut cfg.tracking.mode, self.mode);
        set(&mut cfg.tracking.lattice_scale, self.lattice_scale);
        set(&mut cfg.tracking.k_safety, self.k_safety);
        if self.no_reverse {
            cfg.tracking.reverse = false;
        }
        set(&mut cfg.sweep.u_over_t0, self.sweep_u);
        set(&mut cfg.boost.u_over_t0, self.boost_u);
        set(&mut cfg.boost.harmonic, self.harmonic);
        set(&mut cfg.boost.ratio, self.ratio);
        if self.refine {
            cfg.round_trip.refine = true;
        }
        if self.plots {
            cfg.output.plots = true;
        }
    }
}

enum Action {
    Scenario(Scenario),
    Check,
    PrintConfig,
}

fn execute(cli: Cli) -> Result<(), AppError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cli.overrides.apply(&mut cfg);
    let action = match (cli.check, cli.command) {
        (true, _) | (false, Some(Command::Check)) => Action::Check,
        (false, Some(Command::Config)) => Action::PrintConfig,
        (false, Some(cmd)) => Action::Scenario(match cmd {
            Command::Reference => Scenario::Reference,
            Command::DoublonSweep => Scenario::DoublonSweep,
            Command::Mimicry => Scenario::Mimicry,
            Command::DoublonTracking => Scenario::DoublonTracking,
            Command::HarmonicBoost => Scenario::HarmonicBoost,
            Command::RoundTrip => Scenario::RoundTrip,
            Command::Check | Command::Config => unreachable!(),
        }),
        (false, None) => match cfg.scenario {
            Some(s) => Action::Scenario(s),
            None => {
                return Err(AppError::Config(
                    "no scenario: give a subcommand, set `scenario` in the config, or pass --check".into(),
                ))
            }
        },
    };
    match action {
        Action::PrintConfig => {
            cfg.validate()?;
            print!("{}", cfg.to_toml());
        }
        Action::Check => {
            cfg.validate()?;
            let report = run_check(&cfg)?;
            println!("{report}");
            if !report.passed() {
                return Err(AppError::CheckFailed);
            }
        }
        Action::Scenario(s) => {
            cfg.scenario = Some(s);
            let ctx = Context::new(cfg)?;
            let outcome = run(&ctx, s)?;
            let manifest = write(&ctx, s, &outcome)?;
            println!("{}: wrote {}", s.name(), manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
