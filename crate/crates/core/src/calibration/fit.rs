//! Least-squares fit of the Rabi oscillation model `y = A cos^2(2 pi r x + phi)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 8;
pub const MAX_ITERATIONS: u32 = 200;
pub const PARAM_TOL: f64 = 1e-9;
/// Fits explaining less than this fraction of the variance are unidentifiable.
pub const MIN_R_SQUARED: f64 = 0.5;

const ZERO_PADDING: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    /// Oscillation amplitude `A`.
    pub amplitude_param: f64,
    /// `r` in the model; the Bloch rotation rate is `4 pi r` rad/s.
    pub rate_hz: f64,
    pub phase_rad: f64,
    /// Root-mean-square misfit.
    pub residual: f64,
    pub converged: bool,
    pub iterations: u32,
}

impl RabiFit {
    /// Bloch-sphere angular rate in rad/s. Population follows
    /// `cos^2(Omega t / 2)`, so `Omega = 4 pi r`.
    pub fn angular_rate(&self) -> f64 {
        4.0 * PI * self.rate_hz
    }

    pub fn model(&self, x: f64) -> f64 {
        self.amplitude_param * (2.0 * PI * self.rate_hz * x + self.phase_rad).cos().powi(2)
    }

    fn failed(mean: f64) -> Self {
        Self {
            amplitude_param: mean,
            rate_hz: 0.0,
            phase_rad: 0.0,
            residual: f64::NAN,
            converged: false,
            iterations: 0,
        }
    }
}

/// Parameters in scaled time units (`x / time_scale`).
#[derive(Debug, Clone, Copy)]
struct Params {
    amp: f64,
    rate: f64,
    phase: f64,
}

impl Params {
    fn as_vec(&self) -> Vector3<f64> {
        Vector3::new(self.amp, self.rate, self.phase)
    }

    fn from_vec(v: Vector3<f64>) -> Self {
        Self {
            amp: v[0],
            rate: v[1],
            phase: v[2],
        }
    }
}

struct Problem<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

impl Problem<'_> {
    fn sse(&self, p: &Params) -> f64 {
        self.xs
            .iter()
            .zip(self.ys)
            .map(|(&x, &y)| {
                let u = 2.0 * PI * p.rate * x + p.phase;
                (p.amp * u.cos().powi(2) - y).powi(2)
            })
            .sum()
    }

    fn normal_equations(&self, p: &Params) -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            let u = 2.0 * PI * p.rate * x + p.phase;
            let c2 = u.cos().powi(2);
            let s2 = (2.0 * u).sin();
            let j = Vector3::new(c2, -p.amp * s2 * 2.0 * PI * x, -p.amp * s2);
            let r = p.amp * c2 - y;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        (jtj, jtr)
    }

    /// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt scaling).
    fn refine(&self, start: Params) -> (Params, f64, bool, u32) {
        let mut p = start;
        let mut sse = self.sse(&p);
        let mut lambda = 1e-3;
        for iter in 1..=MAX_ITERATIONS {
            let (jtj, jtr) = self.normal_equations(&p);
            loop {
                let mut damped = jtj;
                for i in 0..3 {
                    damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
                }
                let Some(step) = damped.lu().solve(&(-jtr)) else {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return (p, sse, false, iter);
                    }
                    continue;
                };
                let trial = Params::from_vec(p.as_vec() + step);
                let trial_sse = self.sse(&trial);
                if trial_sse.is_finite() && trial_sse <= sse {
                    let current = p.as_vec();
                    let change = (0..3)
                        .map(|i| step[i].abs() / current[i].abs().max(1.0))
                        .fold(0.0, f64::max);
                    p = trial;
                    sse = trial_sse;
                    lambda = (lambda / 10.0).max(1e-15);
                    if change < PARAM_TOL {
                        return (p, sse, true, iter);
                    }
                    break;
                }
                lambda *= 10.0;
                if lambda > 1e16 {
                    // no descent step left at working precision
                    return (p, sse, true, iter);
                }
            }
        }
        (p, sse, false, MAX_ITERATIONS)
    }
}

/// Frequency (in scaled units) of the strongest non-zero component of the
/// mean-subtracted data, from a zero-padded discrete Fourier sum.
fn dominant_frequency(xs: &[f64], centered: &[f64]) -> Option<f64> {
    let n = xs.len();
    let span = xs[n - 1] - xs[0];
    if !(span > 0.0) {
        return None;
    }
    let spacing = span / (n - 1) as f64;
    let nyquist = 0.5 / spacing;
    let df = 1.0 / (ZERO_PADDING as f64 * span);
    let bins = (nyquist / df).floor() as usize;
    let mut best = None;
    let mut best_power = 0.0;
    for k in 1..=bins {
        let f = k as f64 * df;
        let (mut re, mut im) = (0.0, 0.0);
        for (&x, &y) in xs.iter().zip(centered) {
            let (s, c) = (2.0 * PI * f * x).sin_cos();
            re += y * c;
            im -= y * s;
        }
        let power = re * re + im * im;
        if power > best_power {
            best_power = power;
            best = Some(f);
        }
    }
    best
}

/// Fits `y = A cos^2(2 pi rate x + phi)` to `(time_s, fraction)` points.
///
/// The rate starts at half the dominant Fourier frequency of the data, `A`
/// at the data maximum and `phi` from the first sample. A fit that fails to
/// converge, or explains less than half of the variance, comes back with
/// `converged == false`.
pub fn fit_rabi(series: &[(f64, f64)]) -> Result<RabiFit> {
    if series.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: series.len(),
        });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = sorted
        .iter()
        .map(|p| p.0.abs())
        .fold(0.0, f64::max);
    if !(scale > 0.0) || sorted.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Ok(RabiFit::failed(f64::NAN));
    }
    let xs: Vec<f64> = sorted.iter().map(|p| p.0 / scale).collect();
    let ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let centered: Vec<f64> = ys.iter().map(|y| y - mean).collect();
    let sst: f64 = centered.iter().map(|c| c * c).sum();
    if !(sst > 1e-24 * n) {
        return Ok(RabiFit::failed(mean));
    }
    let Some(freq) = dominant_frequency(&xs, &centered) else {
        return Ok(RabiFit::failed(mean));
    };

    let rate0 = freq / 2.0;
    let amp0 = ys.iter().cloned().fold(f64::MIN, f64::max);
    if !(amp0 > 0.0) {
        return Ok(RabiFit::failed(mean));
    }
    let theta0 = (ys[0] / amp0).clamp(0.0, 1.0).sqrt().acos();
    let problem = Problem { xs: &xs, ys: &ys };

    let mut best: Option<(Params, f64, bool, u32)> = None;
    for sign in [1.0, -1.0] {
        let start = Params {
            amp: amp0,
            rate: rate0,
            phase: sign * theta0 - 2.0 * PI * rate0 * xs[0],
        };
        let result = problem.refine(start);
        let better = match &best {
            None => true,
            Some(b) => (result.2 && !b.2) || (result.2 == b.2 && result.1 < b.1),
        };
        if better {
            best = Some(result);
        }
    }
    let (p, sse, converged, iterations) = best.expect("two starts");

    let (mut rate, mut phase) = (p.rate / scale, p.phase);
    if rate < 0.0 {
        // cos^2 is even
        rate = -rate;
        phase = -phase;
    }
    phase = phase.rem_euclid(PI);
    let r_squared = 1.0 - sse / sst;
    Ok(RabiFit {
        amplitude_param: p.amp,
        rate_hz: rate,
        phase_rad: phase,
        residual: (sse / n).sqrt(),
        converged: converged && p.amp > 0.0 && rate > 0.0 && r_squared >= MIN_R_SQUARED,
        iterations,
    })
}
