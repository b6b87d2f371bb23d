//! CSV, JSON manifest and SVG writers.

use std::fs;
use std::path::{Path, PathBuf};

use hubbard_tracking::spectra::Spectrum;
use hubbard_tracking::units::natural_time_to_fs;
use hubbard_tracking::Trajectory;
use plotters::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, Scenario};
use crate::scenarios::{
    doublon_contrast, run_doublon_sweep, run_harmonic_boost, run_mimicry, run_reference, run_round_trip, AppResult,
    Context, Derived, DoublonContrast, HarmonicBoost, Mimicry, PulseConstants, ReferenceRun, RoundTrip, SweepEntry,
    TrackedRun,
};
use crate::AppError;

pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t_fs",
    "t_natural",
    "phi_rad",
    "current",
    "R",
    "theta_rad",
    "doublon",
    "norm",
    "margin_X",
    "margin_R",
];
pub const SPECTRUM_COLUMNS: [&str; 2] = ["harmonic_order", "power"];

/// Shortest round-trip representation; identical bytes for identical values.
fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn u_label(u: f64) -> String {
    format!("U{u}")
}

fn csv_error(e: csv::Error) -> AppError {
    AppError::Output(e.to_string())
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> AppResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, tr: &Trajectory, epsilon2: f64) -> AppResult<()> {
    write_rows(
        path,
        &TRAJECTORY_COLUMNS,
        tr.records.iter().map(|r| {
            vec![
                num(natural_time_to_fs(r.time)),
                num(r.time),
                num(r.phi),
                num(r.current),
                num(r.r),
                num(r.theta),
                num(r.doublon),
                num(r.norm),
                num(r.margin_x),
                num(r.r - epsilon2),
            ]
        }),
    )
}

pub fn write_spectrum(path: &Path, s: &Spectrum, max_order: f64) -> AppResult<()> {
    write_rows(
        path,
        &SPECTRUM_COLUMNS,
        s.orders
            .iter()
            .zip(&s.power)
            .take_while(|(o, _)| **o <= max_order)
            .map(|(o, p)| vec![num(*o), num(*p)]),
    )
}

/// Time-aligned columns sharing the grid of `times`.
fn write_columns(path: &Path, times: &[f64], columns: &[(String, Vec<Option<f64>>)]) -> AppResult<()> {
    let mut header = vec!["t_fs".to_string(), "t_natural".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path,
        &header,
        times.iter().enumerate().map(|(i, &t)| {
            let mut row = vec![num(natural_time_to_fs(t)), num(t)];
            row.extend(columns.iter().map(|(_, c)| opt(c.get(i).copied().flatten())));
            row
        }),
    )
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: &'a str,
    pub config: &'a Config,
    pub constants: PulseConstants,
    pub derived: Vec<Derived>,
    pub results: Value,
    pub files: Vec<String>,
}

struct Writer<'a> {
    ctx: &'a Context,
    dir: PathBuf,
    files: Vec<String>,
}

impl<'a> Writer<'a> {
    fn new(ctx: &'a Context) -> AppResult<Self> {
        let dir = ctx.cfg.output_dir.clone();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            ctx,
            dir,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn trajectory(&mut self, stem: &str, tr: &Trajectory, spectrum: &Spectrum) -> AppResult<()> {
        let eps2 = self.ctx.cfg.numerics.epsilon2;
        let max = self.ctx.cfg.output.max_harmonic;
        let p = self.path(&format!("{stem}.csv"));
        write_trajectory(&p, tr, eps2)?;
        let p = self.path(&format!("{stem}_spectrum.csv"));
        write_spectrum(&p, spectrum, max)?;
        if self.ctx.cfg.output.plots {
            let times: Vec<f64> = tr.times().into_iter().map(natural_time_to_fs).collect();
            let p = self.path(&format!("{stem}_current.svg"));
            trace_svg(
                &p,
                stem,
                "current (eV·Å)",
                &[(stem.to_string(), &times, &tr.currents())],
            )?;
            let p = self.path(&format!("{stem}_phi.svg"));
            trace_svg(
                &p,
                stem,
                "Φ (rad)",
                &[(stem.to_string(), &times, &tr.unwrapped_phases())],
            )?;
            let p = self.path(&format!("{stem}_doublon.svg"));
            trace_svg(&p, stem, "D", &[(stem.to_string(), &times, &tr.doublons())])?;
            let p = self.path(&format!("{stem}_spectrum.svg"));
            spectrum_svg(&p, stem, &[(stem.to_string(), spectrum)], max)?;
        }
        Ok(())
    }

    fn reference(&mut self, prefix: &str, run: &ReferenceRun) -> AppResult<()> {
        self.trajectory(
            &format!("{prefix}_{}", u_label(run.u_over_t0)),
            &run.trajectory,
            &run.spectrum,
        )
    }

    fn tracked(&mut self, prefix: &str, run: &TrackedRun) -> AppResult<()> {
        let stem = format!(
            "{prefix}_{}_tracks_{}",
            u_label(run.u_over_t0),
            u_label(run.source_u_over_t0)
        );
        self.trajectory(&stem, &run.trajectory, &run.spectrum)
    }

    fn finish(mut self, scenario: Scenario, u_values: &[f64], results: Value) -> AppResult<PathBuf> {
        let mut us: Vec<f64> = u_values.to_vec();
        us.sort_by(f64::total_cmp);
        us.dedup();
        let derived = us.iter().map(|&u| self.ctx.derived(u)).collect::<AppResult<Vec<_>>>()?;
        let name = format!("{}_manifest.json", scenario.name().replace('-', "_"));
        let path = self.path(&name);
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scenario: scenario.name(),
            config: &self.ctx.cfg,
            constants: self.ctx.constants(),
            derived,
            results,
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| AppError::Output(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn tracked_summary(run: &TrackedRun) -> Value {
    json!({
        "u_over_t0": run.u_over_t0,
        "source_u_over_t0": run.source_u_over_t0,
        "lattice_constant": run.a_eff,
        "target_scale": run.scale,
        "halvings": run.halvings,
        "dissipation": run.trajectory.dissipation,
        "branch_jumps_natural": run.trajectory.branch_jumps,
        "min_margin_x": run.trajectory.records.iter().map(|r| r.margin_x).fold(f64::INFINITY, f64::min),
    })
}

fn reference_summary(run: &ReferenceRun) -> Value {
    json!({
        "u_over_t0": run.u_over_t0,
        "ground_energy_ev": run.energy,
        "dissipation": run.trajectory.dissipation,
        "low_order_weight_1_5": run.spectrum.band_weight(1.0, 5.0),
        "high_order_weight_15_35": run.spectrum.band_weight(15.0, 35.0),
    })
}

/// Everything a scenario produced, before it is written.
pub enum Outcome {
    Reference(Vec<ReferenceRun>),
    DoublonSweep(Vec<SweepEntry>),
    Mimicry(Box<Mimicry>),
    DoublonTracking(Box<Mimicry>, DoublonContrast),
    HarmonicBoost(Box<HarmonicBoost>),
    RoundTrip(Box<RoundTrip>),
}

pub fn run(ctx: &Context, scenario: Scenario) -> AppResult<Outcome> {
    Ok(match scenario {
        Scenario::Reference => Outcome::Reference(run_reference(ctx)?),
        Scenario::DoublonSweep => Outcome::DoublonSweep(run_doublon_sweep(ctx)?),
        Scenario::Mimicry => Outcome::Mimicry(Box::new(run_mimicry(ctx)?)),
        Scenario::DoublonTracking => {
            let m = run_mimicry(ctx)?;
            let c = doublon_contrast(ctx, &m)?;
            Outcome::DoublonTracking(Box::new(m), c)
        }
        Scenario::HarmonicBoost => Outcome::HarmonicBoost(Box::new(run_harmonic_boost(ctx)?)),
        Scenario::RoundTrip => Outcome::RoundTrip(Box::new(run_round_trip(ctx)?)),
    })
}

fn write_mimicry(w: &mut Writer, m: &Mimicry) -> AppResult<Value> {
    w.reference("mimicry_reference", &m.source)?;
    w.reference("mimicry_reference", &m.target)?;
    w.tracked("mimicry", &m.forward)?;
    if let Some(r) = &m.reverse {
        w.tracked("mimicry", r)?;
    }
    if w.ctx.cfg.output.plots {
        let fs: Vec<f64> = m
            .source
            .trajectory
            .times()
            .into_iter()
            .map(natural_time_to_fs)
            .collect();
        let mut curves = vec![
            (format!("J {}", u_label(m.source.u_over_t0)), &m.source.spectrum),
            (format!("J {}", u_label(m.target.u_over_t0)), &m.target.spectrum),
            ("forward tracked".to_string(), &m.forward.spectrum),
        ];
        let mut fields = vec![
            ("Φ reference".to_string(), &fs, m.source.trajectory.unwrapped_phases()),
            ("Φ_T forward".to_string(), &fs, m.forward.trajectory.unwrapped_phases()),
        ];
        if let Some(r) = &m.reverse {
            curves.push(("reverse tracked".to_string(), &r.spectrum));
            fields.push(("Φ_T reverse".to_string(), &fs, r.trajectory.unwrapped_phases()));
        }
        let p = w.path("mimicry_spectra.svg");
        spectrum_svg(&p, "mimicry spectra", &curves, w.ctx.cfg.output.max_harmonic)?;
        let p = w.path("mimicry_fields.svg");
        let series: Vec<(String, &Vec<f64>, &Vec<f64>)> = fields.iter().map(|(n, x, y)| (n.clone(), *x, y)).collect();
        trace_svg(&p, "control fields", "Φ (rad)", &series)?;
    }
    Ok(json!({
        "source": reference_summary(&m.source),
        "target": reference_summary(&m.target),
        "forward": tracked_summary(&m.forward),
        "reverse": m.reverse.as_ref().map(tracked_summary),
    }))
}

pub fn write(ctx: &Context, scenario: Scenario, outcome: &Outcome) -> AppResult<PathBuf> {
    let mut w = Writer::new(ctx)?;
    let t = &ctx.cfg.tracking;
    let pair = [t.source_u_over_t0, t.target_u_over_t0];
    match outcome {
        Outcome::Reference(runs) => {
            for r in runs {
                w.reference("reference", r)?;
            }
            let results = json!({ "runs": runs.iter().map(reference_summary).collect::<Vec<_>>() });
            w.finish(scenario, &ctx.cfg.lattice.u_over_t0, results)
        }
        Outcome::DoublonSweep(entries) => {
            for e in entries {
                w.reference("doublon_sweep", &e.reference)?;
            }
            let times = ctx.grid.times();
            let columns: Vec<(String, Vec<Option<f64>>)> = entries
                .iter()
                .map(|e| {
                    let d = e.reference.trajectory.doublons().into_iter().map(Some).collect();
                    (format!("D_{}", u_label(e.derived.u_over_t0)), d)
                })
                .collect();
            let p = w.path("doublon_sweep.csv");
            write_columns(&p, &times, &columns)?;
            let p = w.path("doublon_sweep_thresholds.csv");
            write_rows(
                &p,
                &[
                    "u_over_t0",
                    "gap_ev",
                    "correlation_length",
                    "e_th_mv_cm",
                    "t_th_natural",
                    "t_th_fs",
                    "doublon_at_t_th",
                    "doublon_one_cycle_later",
                ],
                entries.iter().map(|e| {
                    let d = &e.derived;
                    vec![
                        num(d.u_over_t0),
                        num(d.gap_ev),
                        opt(d.correlation_length),
                        opt(d.e_th_mv_cm),
                        opt(d.t_th_natural),
                        opt(d.t_th_fs),
                        opt(e.doublon_at_threshold.map(|x| x.0)),
                        opt(e.doublon_at_threshold.map(|x| x.1)),
                    ]
                }),
            )?;
            if ctx.cfg.output.plots {
                let fs: Vec<f64> = times.iter().map(|&t| natural_time_to_fs(t)).collect();
                let ds: Vec<(String, Vec<f64>)> = entries
                    .iter()
                    .map(|e| (u_label(e.derived.u_over_t0), e.reference.trajectory.doublons()))
                    .collect();
                let series: Vec<(String, &Vec<f64>, &Vec<f64>)> = ds.iter().map(|(n, d)| (n.clone(), &fs, d)).collect();
                let p = w.path("doublon_sweep.svg");
                trace_svg(&p, "doublon occupation", "D", &series)?;
            }
            let results = json!({
                "runs": entries.iter().map(|e| json!({
                    "u_over_t0": e.derived.u_over_t0,
                    "t_th_natural": e.derived.t_th_natural,
                    "doublon_at_t_th": e.doublon_at_threshold.map(|x| x.0),
                    "doublon_one_cycle_later": e.doublon_at_threshold.map(|x| x.1),
                    "dissipation": e.reference.trajectory.dissipation,
                })).collect::<Vec<_>>()
            });
            w.finish(scenario, &ctx.cfg.sweep.u_over_t0, results)
        }
        Outcome::Mimicry(m) => {
            let results = write_mimicry(&mut w, m)?;
            w.finish(scenario, &pair, results)
        }
        Outcome::DoublonTracking(m, contrast) => {
            let mut results = write_mimicry(&mut w, m)?;
            let times = ctx.grid.times();
            let some = |v: Vec<f64>| v.into_iter().map(Some).collect::<Vec<_>>();
            let rev = m
                .reverse
                .as_ref()
                .map(|r| some(r.trajectory.doublons()))
                .unwrap_or_default();
            let columns = vec![
                (
                    format!("D_{}", u_label(m.source.u_over_t0)),
                    some(m.source.trajectory.doublons()),
                ),
                (format!("D_T_{}", u_label(m.source.u_over_t0)), rev),
                (
                    format!("D_{}", u_label(m.target.u_over_t0)),
                    some(m.target.trajectory.doublons()),
                ),
                (
                    format!("D_T_{}", u_label(m.target.u_over_t0)),
                    some(m.forward.trajectory.doublons()),
                ),
            ];
            let p = w.path("doublon_tracking.csv");
            write_columns(&p, &times, &columns)?;
            if ctx.cfg.output.plots {
                let fs: Vec<f64> = times.iter().map(|&t| natural_time_to_fs(t)).collect();
                let ds: Vec<(String, Vec<f64>)> = columns
                    .iter()
                    .filter(|(_, c)| !c.is_empty())
                    .map(|(n, c)| (n.clone(), c.iter().map(|v| v.unwrap_or(f64::NAN)).collect()))
                    .collect();
                let series: Vec<(String, &Vec<f64>, &Vec<f64>)> = ds.iter().map(|(n, d)| (n.clone(), &fs, d)).collect();
                let p = w.path("doublon_tracking.svg");
                trace_svg(&p, "doublon occupation under tracking", "D", &series)?;
            }
            results["contrast"] = serde_json::to_value(contrast).map_err(|e| AppError::Output(e.to_string()))?;
            w.finish(scenario, &pair, results)
        }
        Outcome::HarmonicBoost(b) => {
            w.reference("harmonic_boost_reference", &b.source)?;
            let p = w.path("harmonic_boost_target.csv");
            let samples: Vec<Option<f64>> = b.target_samples.iter().copied().map(Some).collect();
            write_columns(&p, &b.target_times, &[("current".into(), samples)])?;
            let p = w.path("harmonic_boost_target_spectrum.csv");
            write_spectrum(&p, &b.target_spectrum, ctx.cfg.output.max_harmonic)?;
            for r in &b.runs {
                w.trajectory(
                    &format!("harmonic_boost_{}", u_label(r.u_over_t0)),
                    &r.trajectory,
                    &r.spectrum,
                )?;
            }
            if ctx.cfg.output.plots {
                let mut curves = vec![("target".to_string(), &b.target_spectrum)];
                curves.extend(
                    b.runs
                        .iter()
                        .map(|r| (format!("tracked {}", u_label(r.u_over_t0)), &r.spectrum)),
                );
                let p = w.path("harmonic_boost_spectra.svg");
                spectrum_svg(&p, "boosted harmonic", &curves, ctx.cfg.output.max_harmonic)?;
                let fs: Vec<f64> = b.target_times.iter().map(|&t| natural_time_to_fs(t)).collect();
                let phis: Vec<(String, Vec<f64>)> = b
                    .runs
                    .iter()
                    .map(|r| (u_label(r.u_over_t0), r.trajectory.unwrapped_phases()))
                    .collect();
                let series: Vec<(String, &Vec<f64>, &Vec<f64>)> =
                    phis.iter().map(|(n, d)| (n.clone(), &fs, d)).collect();
                let p = w.path("harmonic_boost_fields.svg");
                trace_svg(&p, "control fields", "Φ_T (rad)", &series)?;
            }
            let results = json!({
                "source": reference_summary(&b.source),
                "gain": b.gain,
                "target_scale": b.scale,
                "halvings": b.halvings,
                "target_harmonic_db": b.target_harmonic_db,
                "runs": b.runs.iter().map(|r| json!({
                    "u_over_t0": r.u_over_t0,
                    "harmonic_db": r.harmonic_db,
                    "dissipation": r.trajectory.dissipation,
                    "branch_jumps_natural": r.trajectory.branch_jumps,
                })).collect::<Vec<_>>(),
                "field_distances": b.distances,
            });
            let mut us = ctx.cfg.boost.u_over_t0.clone();
            us.push(ctx.cfg.boost.source_u_over_t0);
            w.finish(scenario, &us, results)
        }
        Outcome::RoundTrip(rt) => {
            w.reference("round_trip_reference", &rt.mimicry_source)?;
            w.tracked("round_trip", &rt.tracked)?;
            let spectrum = ctx.spectrum(&rt.driven)?;
            w.trajectory(
                &format!("round_trip_{}_driven", u_label(rt.tracked.u_over_t0)),
                &rt.driven,
                &spectrum,
            )?;
            let results = json!({
                "tracked": tracked_summary(&rt.tracked),
                "report": rt.report,
                "refined": rt.refined,
                "observed_order": rt.order(),
            });
            w.finish(scenario, &pair, results)
        }
    }
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(23, 190, 207),
];

fn plot_error<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Output(format!("plot: {e}"))
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-12);
    (lo - pad, hi + pad)
}

fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> AppResult<()> {
    let root = SVGBackend::new(path, (900, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_error)?;
    let (x0, x1) = bounds(series.iter().flat_map(|(_, p)| p.iter().map(|(x, _)| x)));
    let (y0, y1) = bounds(series.iter().flat_map(|(_, p)| p.iter().map(|(_, y)| y)));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_error)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .disable_mesh()
        .draw()
        .map_err(plot_error)?;
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                points.iter().copied().filter(|(_, y)| y.is_finite()),
                color,
            ))
            .map_err(plot_error)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_error)?;
    root.present().map_err(plot_error)?;
    Ok(())
}

pub fn trace_svg(path: &Path, title: &str, y_label: &str, series: &[(String, &Vec<f64>, &Vec<f64>)]) -> AppResult<()> {
    let pts: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(n, x, y)| (n.clone(), x.iter().copied().zip(y.iter().copied()).collect()))
        .collect();
    line_chart(path, title, "t (fs)", y_label, &pts)
}

pub fn spectrum_svg(path: &Path, title: &str, series: &[(String, &Spectrum)], max_order: f64) -> AppResult<()> {
    let pts: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(n, s)| {
            let floor = s.power.iter().copied().fold(0.0, f64::max) * 1e-16;
            let p = s
                .orders
                .iter()
                .zip(&s.power)
                .take_while(|(o, _)| **o <= max_order)
                .map(|(o, p)| (*o, p.max(floor).log10()))
                .collect();
            (n.clone(), p)
        })
        .collect();
    line_chart(path, title, "harmonic order", "log10 power", &pts)
}
