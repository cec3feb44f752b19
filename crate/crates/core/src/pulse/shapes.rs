//! Sampled waveforms and parametric pulse shapes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude slack allowed above the normalised drive strength of 1.
pub const AMPLITUDE_SLACK: f64 = 1e-12;

/// Complex per-dt drive amplitudes; the real part drives the in-phase
/// channel and the imaginary part the quadrature channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Waveform {
    samples: Vec<Complex64>,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.norm() <= 1.0 + AMPLITUDE_SLACK))
        {
            return Err(Error::InvalidPulse(format!(
                "sample {i} has magnitude {} above 1",
                s.norm()
            )));
        }
        Ok(Self { samples })
    }

    /// Skips the magnitude check; used when sampling parametric shapes whose
    /// bounds are enforced by schedule validation instead.
    pub(crate) fn unchecked(samples: Vec<Complex64>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Multiplies every sample by `e^{i angle}`.
    pub fn rotated(&self, angle: f64) -> Self {
        let phase = Complex64::from_polar(1.0, angle);
        Self {
            samples: self.samples.iter().map(|s| s * phase).collect(),
        }
    }
}

/// Analytic pulse shapes, sampled once per dt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParametricPulse {
    Square {
        amplitude: Complex64,
        duration_dt: u64,
    },
    /// Gaussian shifted and rescaled so both endpoints are exactly zero and
    /// the sampled maximum equals `peak`.
    LiftedGaussian {
        peak: Complex64,
        duration_dt: u64,
        sigma_dt: f64,
    },
    /// Lifted Gaussian on the in-phase channel plus `beta` times its time
    /// derivative (per dt) on the quadrature channel.
    Drag {
        peak: Complex64,
        duration_dt: u64,
        sigma_dt: f64,
        beta: f64,
    },
}

impl ParametricPulse {
    pub fn square(amplitude: f64, duration_dt: u64) -> Self {
        Self::Square {
            amplitude: Complex64::new(amplitude, 0.0),
            duration_dt,
        }
    }

    pub fn duration_dt(&self) -> u64 {
        match *self {
            Self::Square { duration_dt, .. }
            | Self::LiftedGaussian { duration_dt, .. }
            | Self::Drag { duration_dt, .. } => duration_dt,
        }
    }

    /// Checks the shape parameters (not hardware limits).
    pub fn check(&self) -> Result<()> {
        let (scale, duration, sigma, beta) = match *self {
            Self::Square {
                amplitude,
                duration_dt,
            } => (amplitude, duration_dt, 1.0, 0.0),
            Self::LiftedGaussian {
                peak,
                duration_dt,
                sigma_dt,
            } => (peak, duration_dt, sigma_dt, 0.0),
            Self::Drag {
                peak,
                duration_dt,
                sigma_dt,
                beta,
            } => (peak, duration_dt, sigma_dt, beta),
        };
        if duration == 0 {
            return Err(Error::InvalidPulse("duration must be at least 1dt".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidPulse(format!("sigma must be positive, got {sigma}")));
        }
        if !(scale.re.is_finite() && scale.im.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidPulse("non-finite pulse parameter".into()));
        }
        Ok(())
    }

    /// Multiplies the complex amplitude by `e^{i angle}`; the whole sampled
    /// waveform rotates with it.
    pub fn rotated(&self, angle: f64) -> Self {
        let phase = Complex64::from_polar(1.0, angle);
        let mut out = self.clone();
        match &mut out {
            Self::Square { amplitude, .. } => *amplitude *= phase,
            Self::LiftedGaussian { peak, .. } | Self::Drag { peak, .. } => *peak *= phase,
        }
        out
    }
}

/// Real lifted-Gaussian envelope with unit sampled maximum, and its analytic
/// derivative scaled by the same lifting factor.
pub(crate) fn lifted_gaussian_envelope(duration_dt: u64, sigma_dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = duration_dt as usize;
    let center = (duration_dt as f64 - 1.0) / 2.0;
    let gauss = |t: f64| (-(t - center).powi(2) / (2.0 * sigma_dt * sigma_dt)).exp();
    let edge = gauss(0.0);
    let top = gauss(center.floor());
    let span = top - edge;
    if span <= 0.0 {
        return (vec![0.0; n], vec![0.0; n]);
    }
    let mut env = Vec::with_capacity(n);
    let mut deriv = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64;
        let g = gauss(t);
        env.push((g - edge) / span);
        deriv.push(-(t - center) / (sigma_dt * sigma_dt) * g / span);
    }
    (env, deriv)
}

/// Samples a parametric pulse into one complex amplitude per dt.
pub fn sample_pulse(pulse: &ParametricPulse) -> Waveform {
    match *pulse {
        ParametricPulse::Square {
            amplitude,
            duration_dt,
        } => Waveform::unchecked(vec![amplitude; duration_dt as usize]),
        ParametricPulse::LiftedGaussian {
            peak,
            duration_dt,
            sigma_dt,
        } => {
            let (env, _) = lifted_gaussian_envelope(duration_dt, sigma_dt);
            Waveform::unchecked(env.into_iter().map(|e| peak * e).collect())
        }
        ParametricPulse::Drag {
            peak,
            duration_dt,
            sigma_dt,
            beta,
        } => {
            let (env, deriv) = lifted_gaussian_envelope(duration_dt, sigma_dt);
            Waveform::unchecked(
                env.into_iter()
                    .zip(deriv)
                    .map(|(e, d)| peak * Complex64::new(e, beta * d))
                    .collect(),
            )
        }
    }
}
