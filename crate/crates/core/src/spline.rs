//! Natural cubic spline on a uniform grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    start: f64,
    step: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl CubicSpline {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Signal("spline needs at least two samples".into()));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Signal(format!("spline step must be positive, got {step}")));
        }
        let n = values.len();
        let mut curvature = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on (1, 4, 1) M = 6 Δ²y / h²
            let m = n - 2;
            let mut c_prime = vec![0.0; m];
            let mut d_prime = vec![0.0; m];
            for i in 0..m {
                let rhs = 6.0 * (values[i + 2] - 2.0 * values[i + 1] + values[i]) / (step * step);
                let denom = if i == 0 { 4.0 } else { 4.0 - c_prime[i - 1] };
                c_prime[i] = 1.0 / denom;
                d_prime[i] = if i == 0 {
                    rhs / denom
                } else {
                    (rhs - d_prime[i - 1]) / denom
                };
            }
            for i in (0..m).rev() {
                curvature[i + 1] = if i + 1 == m {
                    d_prime[i]
                } else {
                    d_prime[i] - c_prime[i] * curvature[i + 2]
                };
            }
        }
        Ok(Self {
            start,
            step,
            values,
            curvature,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.values.len();
        let s = (t - self.start) / self.step;
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        (i, s - i as f64)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (i, u) = self.locate(t);
        let h2 = self.step * self.step;
        let a = 1.0 - u;
        a * self.values[i]
            + u * self.values[i + 1]
            + h2 / 6.0 * ((a * a * a - a) * self.curvature[i] + (u * u * u - u) * self.curvature[i + 1])
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (i, u) = self.locate(t);
        let h = self.step;
        let a = 1.0 - u;
        (self.values[i + 1] - self.values[i]) / h
            + h / 6.0 * (-(3.0 * a * a - 1.0) * self.curvature[i] + (3.0 * u * u - 1.0) * self.curvature[i + 1])
    }
}
