//! High-harmonic spectra of the dipole acceleration `dJ/dt`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::CubicSpline;
use crate::tracking::{scale_target, TargetScaling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Blackman,
    Rectangular,
}

impl Window {
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Blackman => {
                if n == 1 {
                    return vec![1.0];
                }
                let m = (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        let x = TAU * i as f64 / m;
                        0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos()
                    })
                    .collect()
            }
        }
    }
}

/// Zero-padding factor applied before the transform.
pub const DEFAULT_PADDING: usize = 8;

fn check_uniform(times: &[f64]) -> Result<f64> {
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Signal("time grid must be increasing".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs() * 1e-6) {
            return Err(Error::Signal("time grid is not uniform".into()));
        }
    }
    Ok(dt)
}

/// `dJ/dt` by fourth-order finite differences (one-sided at the ends).
pub fn dipole_acceleration(times: &[f64], current: &[f64]) -> Result<Vec<f64>> {
    if times.len() != current.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: current.len(),
        });
    }
    let n = current.len();
    if n < 5 {
        return Err(Error::Signal(format!("need at least 5 samples, got {n}")));
    }
    let h = check_uniform(times)?;
    let f = current;
    let mut out = vec![0.0; n];
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    let e = n - 1;
    out[e] = (25.0 * f[e] - 48.0 * f[e - 1] + 36.0 * f[e - 2] - 16.0 * f[e - 3] + 3.0 * f[e - 4]) / (12.0 * h);
    out[e - 1] = (3.0 * f[e] + 10.0 * f[e - 1] - 18.0 * f[e - 2] + 6.0 * f[e - 3] - f[e - 4]) / (12.0 * h);
    Ok(out)
}

/// One-sided power spectrum on a harmonic-order axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    /// `ω / ω0`, starting at 0 (DC) and strictly increasing.
    pub orders: Vec<f64>,
    pub power: Vec<f64>,
    pub window: Window,
    /// Transform length after zero-padding.
    pub fft_len: usize,
    pub samples: usize,
    pub dt: f64,
}

impl Spectrum {
    /// Linear interpolation of the power at a harmonic order.
    pub fn power_at(&self, order: f64) -> f64 {
        let step = self.orders[1] - self.orders[0];
        let s = order / step;
        let i = (s.floor().max(0.0) as usize).min(self.orders.len() - 2);
        let u = (s - i as f64).clamp(0.0, 1.0);
        (1.0 - u) * self.power[i] + u * self.power[i + 1]
    }

    /// Largest power among bins with order in `[lo, hi]`.
    pub fn peak(&self, lo: f64, hi: f64) -> f64 {
        self.orders
            .iter()
            .zip(&self.power)
            .filter(|(o, _)| **o >= lo && **o <= hi)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max)
    }

    /// `Σ P Δorder` over bins with order in `[lo, hi]`.
    pub fn band_weight(&self, lo: f64, hi: f64) -> f64 {
        let step = self.orders[1] - self.orders[0];
        self.orders
            .iter()
            .zip(&self.power)
            .filter(|(o, _)| **o >= lo && **o <= hi)
            .map(|(_, p)| p * step)
            .sum()
    }

    /// Windowed time-domain energy recovered through Parseval's theorem.
    pub fn total_energy(&self) -> f64 {
        let n = self.fft_len;
        let last = self.power.len() - 1;
        let mut s = self.power[0];
        for (k, p) in self.power.iter().enumerate().skip(1) {
            s += if k == last && n.is_multiple_of(2) { *p } else { 2.0 * p };
        }
        s / n as f64
    }
}

/// `|FFT(window · signal)|²` with `padding`-fold zero-padding.
pub fn hhg_spectrum(signal: &[f64], dt: f64, omega0: f64, window: Window, padding: usize) -> Result<Spectrum> {
    if signal.is_empty() {
        return Err(Error::Signal("empty series".into()));
    }
    if signal.len() < 2 || !(dt > 0.0) || !(omega0 > 0.0) {
        return Err(Error::Signal(
            "spectrum needs >= 2 samples, dt > 0 and omega0 > 0".into(),
        ));
    }
    let n = signal.len();
    let mut len = n * padding.max(1);
    len += len % 2;
    let w = window.weights(n);
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); len];
    for i in 0..n {
        buf[i] = Complex64::new(w[i] * signal[i], 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = len / 2;
    let dorder = TAU / (len as f64 * dt * omega0);
    Ok(Spectrum {
        orders: (0..=half).map(|k| k as f64 * dorder).collect(),
        power: buf[..=half].iter().map(|c| c.norm_sqr()).collect(),
        window,
        fft_len: len,
        samples: n,
        dt,
    })
}

/// Spectrum of `dJ/dt` for a sampled current with the default window and padding.
pub fn current_spectrum(times: &[f64], current: &[f64], omega0: f64) -> Result<Spectrum> {
    let accel = dipole_acceleration(times, current)?;
    hhg_spectrum(&accel, times[1] - times[0], omega0, Window::Blackman, DEFAULT_PADDING)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostSpec {
    /// Harmonic order whose band is amplified.
    pub harmonic: f64,
    /// Target peak power relative to the first harmonic.
    pub ratio: f64,
}

/// A synthetic target current with one harmonic band amplified.
#[derive(Debug, Clone)]
pub struct BoostedTarget {
    pub times: Vec<f64>,
    /// Scaled target samples on `times`.
    pub samples: Vec<f64>,
    /// Amplitude gain applied to the boosted band.
    pub gain: f64,
    /// Feasibility scale `k` applied after boosting.
    pub scale: f64,
    spline: CubicSpline,
}

impl BoostedTarget {
    pub fn eval(&self, t: f64) -> f64 {
        self.spline.eval(t)
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }
}

fn peak_ratio(times: &[f64], current: &[f64], omega0: f64, harmonic: f64) -> Result<f64> {
    let s = current_spectrum(times, current, omega0)?;
    Ok(s.peak(harmonic - 0.5, harmonic + 0.5) / s.peak(0.5, 1.5))
}

/// Amplifies the band of width ω0 around `boost.harmonic` in the spectrum of
/// `dJ/dt` until its peak power is `boost.ratio` times the first-harmonic
/// peak, integrates back to a current and rescales it with `scaling`.
pub fn boosted_target_current(
    times: &[f64],
    current: &[f64],
    omega0: f64,
    boost: &BoostSpec,
    scaling: &TargetScaling,
) -> Result<BoostedTarget> {
    let accel = dipole_acceleration(times, current)?;
    let n = accel.len();
    let dt = times[1] - times[0];
    let dorder = TAU / (n as f64 * dt * omega0);
    let nyquist = (n / 2) as f64 * dorder;
    if boost.harmonic + 0.5 > nyquist {
        return Err(Error::Signal(format!(
            "harmonic {} beyond Nyquist order {nyquist:.1}",
            boost.harmonic
        )));
    }
    if !(boost.ratio > 0.0) {
        return Err(Error::Signal("boost ratio must be positive".into()));
    }

    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex64> = accel.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);
    for (k, c) in spec.iter_mut().enumerate() {
        let order = k.min(n - k) as f64 * dorder;
        if (order - boost.harmonic).abs() > 0.5 {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut spec);

    // band-limited current increment, trapezoidal from zero
    let mut band_current = vec![0.0; n];
    for i in 1..n {
        band_current[i] = band_current[i - 1] + 0.5 * dt * (spec[i].re + spec[i - 1].re) / n as f64;
    }

    let boosted = |gain: f64| -> Vec<f64> {
        current
            .iter()
            .zip(&band_current)
            .map(|(j, b)| j + (gain - 1.0) * b)
            .collect()
    };

    let mut gain = 1.0;
    for _ in 0..50 {
        let measured = peak_ratio(times, &boosted(gain), omega0, boost.harmonic)?;
        let correction = (boost.ratio / measured).sqrt();
        if (correction - 1.0).abs() < 1e-6 {
            break;
        }
        gain *= correction;
    }
    let (scale, samples) = scale_target(&boosted(gain), scaling)?;
    let spline = CubicSpline::new(times[0], dt, samples.clone())?;
    Ok(BoostedTarget {
        times: times.to_vec(),
        samples,
        gain,
        scale,
        spline,
    })
}
