//! Simulated noisy drive qubit.
//!
//! The qubit is a 2x2 density matrix driven by `H = (I sx + Q sy) / 2` where
//! `I + iQ` is the Rabi vector produced by the current waveform sample.
//! Every dt sample applies the drive unitary, then amplitude damping
//! (`gamma1 = 1 - e^{-dt/T1}`), then a phase flip with probability
//! `(1 - e^{-dt gamma_phi}) / 2`, `gamma_phi = 1/T2 - 1/(2 T1)`. The two
//! channels together shrink coherences by exactly `e^{-dt/T2}` per sample.

mod density;
mod presets;

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::{validate, HardwareConstraints, SampleTime, Schedule, ScheduleItem};

pub use density::{DensityMatrix, STATE_TOL};
pub use presets::{named_preset, preset_names, replication_preset, JobRecord, JOB_RECORDS};

/// Rabi frequency of the reference backend at amplitude 0.068, in Hz.
pub const ANCHOR_RABI_HZ: f64 = 10.23e6;
/// Drive amplitude that produced [`ANCHOR_RABI_HZ`].
pub const ANCHOR_AMPLITUDE: f64 = 0.068;

/// Map from drive amplitude to Rabi frequency, odd in the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub slope_hz_per_amp: f64,
    pub cubic_hz_per_amp3: f64,
}

impl TransferFunction {
    pub fn linear(slope_hz_per_amp: f64) -> Self {
        Self {
            slope_hz_per_amp,
            cubic_hz_per_amp3: 0.0,
        }
    }

    /// Linear transfer with 0.068 -> 10.23 MHz (about 150.4 MHz per unit amplitude).
    pub fn anchored() -> Self {
        Self::linear(ANCHOR_RABI_HZ / ANCHOR_AMPLITUDE)
    }

    /// Rabi frequency in Hz.
    pub fn rabi_hz(&self, amplitude: f64) -> f64 {
        self.slope_hz_per_amp * amplitude + self.cubic_hz_per_amp3 * amplitude.powi(3)
    }

    /// Angular rate in rad/s; a constant drive rotates the Bloch vector by `rate * t`.
    pub fn angular_rate(&self, amplitude: f64) -> f64 {
        2.0 * PI * self.rabi_hz(amplitude)
    }
}

impl Default for TransferFunction {
    fn default() -> Self {
        Self::anchored()
    }
}

/// Everything the simulator needs to know about the qubit and its control line.
///
/// Infinite `t1_us`/`t2_us` switch the corresponding decay off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceModel {
    pub sample_time: SampleTime,
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout_error: f64,
    pub transfer: TransferFunction,
    pub constraints: HardwareConstraints,
    pub seed: u64,
}

impl Default for DeviceModel {
    /// Averages over the reference runs: T1 = 146 us, T2 = 45 us, readout error 0.0166.
    fn default() -> Self {
        Self {
            sample_time: SampleTime::default(),
            t1_us: 146.0,
            t2_us: 45.0,
            readout_error: 0.0166,
            transfer: TransferFunction::anchored(),
            constraints: HardwareConstraints::default(),
            seed: 0,
        }
    }
}

impl DeviceModel {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDevice(msg));
        if !(self.t1_us > 0.0) {
            return bad(format!("T1 must be positive, got {}", self.t1_us));
        }
        if !(self.t2_us > 0.0) {
            return bad(format!("T2 must be positive, got {}", self.t2_us));
        }
        if !(self.t2_us <= 2.0 * self.t1_us) {
            return bad(format!(
                "T2 = {} us exceeds 2 T1 = {} us",
                self.t2_us,
                2.0 * self.t1_us
            ));
        }
        if !(0.0..1.0).contains(&self.readout_error) {
            return bad(format!("readout error {} not in [0, 1)", self.readout_error));
        }
        if !(self.transfer.slope_hz_per_amp > 0.0) || !self.transfer.cubic_hz_per_amp3.is_finite() {
            return bad("transfer slope must be positive and finite".into());
        }
        if !self.constraints.is_valid() {
            return bad("hardware constraints must be positive".into());
        }
        Ok(())
    }

    /// Same drive and timing, no decay and perfect readout.
    pub fn noiseless(&self) -> Self {
        Self {
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            readout_error: 0.0,
            ..*self
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.t1_us.is_infinite() && self.t2_us.is_infinite()
    }

    pub fn dt_seconds(&self) -> f64 {
        self.sample_time.dt_seconds()
    }

    fn noise_step(&self, samples: f64) -> NoiseStep {
        let t = samples * self.dt_seconds();
        let t1 = self.t1_us * 1e-6;
        let t2 = self.t2_us * 1e-6;
        let keep = (-t / t1).exp();
        let gamma_phi = 1.0 / t2 - 1.0 / (2.0 * t1);
        let flip = (1.0 - (-t * gamma_phi).exp()) / 2.0;
        NoiseStep { keep, flip }
    }

    pub fn to_preset_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DevicePreset::from(self))?)
    }

    pub fn from_preset_json(text: &str) -> Result<Self> {
        let preset: DevicePreset = serde_json::from_str(text)?;
        preset.into_device()
    }

    pub fn load_preset(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let preset: DevicePreset = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        preset.into_device()
    }
}

/// Device preset document. `null` T1/T2 mean no decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevicePreset {
    pub dt_ns: f64,
    pub t1_us: Option<f64>,
    pub t2_us: Option<f64>,
    pub readout_error: f64,
    pub transfer: TransferDoc,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDoc {
    pub slope_mhz_per_amp: f64,
    /// MHz per amplitude cubed.
    #[serde(default)]
    pub cubic: f64,
}

impl From<&DeviceModel> for DevicePreset {
    fn from(d: &DeviceModel) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            dt_ns: d.sample_time.dt_ns(),
            t1_us: finite(d.t1_us),
            t2_us: finite(d.t2_us),
            readout_error: d.readout_error,
            transfer: TransferDoc {
                slope_mhz_per_amp: d.transfer.slope_hz_per_amp / 1e6,
                cubic: d.transfer.cubic_hz_per_amp3 / 1e6,
            },
            seed: d.seed,
        }
    }
}

impl DevicePreset {
    pub fn into_device(self) -> Result<DeviceModel> {
        let device = DeviceModel {
            sample_time: SampleTime::new(self.dt_ns)?,
            t1_us: self.t1_us.unwrap_or(f64::INFINITY),
            t2_us: self.t2_us.unwrap_or(f64::INFINITY),
            readout_error: self.readout_error,
            transfer: TransferFunction {
                slope_hz_per_amp: self.transfer.slope_mhz_per_amp * 1e6,
                cubic_hz_per_amp3: self.transfer.cubic * 1e6,
            },
            constraints: HardwareConstraints::default(),
            seed: self.seed,
        };
        device.check()?;
        Ok(device)
    }
}

/// Measurement counts over a batch of shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub zeros: u64,
    pub ones: u64,
    pub shots: u64,
}

impl ShotResult {
    pub fn zero_fraction(&self) -> f64 {
        self.zeros as f64 / self.shots as f64
    }

    pub fn one_fraction(&self) -> f64 {
        self.ones as f64 / self.shots as f64
    }
}

/// Angular Rabi rate (rad/s) for a drive amplitude.
pub fn rabi_angular_rate(device: &DeviceModel, amplitude: f64) -> Result<f64> {
    let max = device.constraints.max_amplitude;
    if !(amplitude.abs() <= max) {
        return Err(Error::AmplitudeOutOfRange { amplitude, max });
    }
    Ok(device.transfer.angular_rate(amplitude))
}

/// Combined amplitude-damping and phase-flip channel over some number of samples.
#[derive(Debug, Clone, Copy)]
struct NoiseStep {
    /// `1 - gamma1`: surviving excited population.
    keep: f64,
    /// Phase-flip probability.
    flip: f64,
}

impl NoiseStep {
    fn apply(&self, rho: &mut Matrix2<Complex64>) {
        // amplitude damping
        let excited = rho[(1, 1)];
        rho[(0, 0)] += excited * (1.0 - self.keep);
        rho[(1, 1)] = excited * self.keep;
        let damp = self.keep.sqrt();
        // phase flip
        let coherence = damp * (1.0 - 2.0 * self.flip);
        rho[(0, 1)] *= coherence;
        rho[(1, 0)] *= coherence;
    }
}

/// `exp(-i (theta/2) (cos(phi) sx + sin(phi) sy))`.
pub fn drive_unitary(theta: f64, phi: f64) -> Matrix2<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let off = Complex64::new(0.0, -s);
    Matrix2::new(
        Complex64::new(c, 0.0),
        off * Complex64::from_polar(1.0, -phi),
        off * Complex64::from_polar(1.0, phi),
        Complex64::new(c, 0.0),
    )
}

struct Stepper<'a> {
    device: &'a DeviceModel,
    noise: Option<NoiseStep>,
    dt: f64,
    last_sample: Option<Complex64>,
    unitary: Matrix2<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(device: &'a DeviceModel) -> Self {
        Self {
            device,
            noise: (!device.is_noiseless()).then(|| device.noise_step(1.0)),
            dt: device.dt_seconds(),
            last_sample: None,
            unitary: Matrix2::identity(),
        }
    }

    fn drive(&mut self, rho: &mut Matrix2<Complex64>, sample: Complex64) {
        if self.last_sample != Some(sample) {
            let omega = self.device.transfer.angular_rate(sample.norm());
            self.unitary = drive_unitary(omega * self.dt, sample.arg());
            self.last_sample = Some(sample);
        }
        *rho = self.unitary * *rho * self.unitary.adjoint();
        if let Some(noise) = self.noise {
            noise.apply(rho);
        }
    }

    fn idle(&self, rho: &mut Matrix2<Complex64>, samples: u64) {
        if samples > 0 && !self.device.is_noiseless() {
            self.device.noise_step(samples as f64).apply(rho);
        }
    }
}

/// Evolves `initial` through the schedule, sample by sample.
///
/// Phase shifts rotate the frame of every later pulse; constraint violations are
/// reported before anything is simulated.
pub fn evolve(device: &DeviceModel, schedule: &Schedule, initial: &DensityMatrix) -> Result<DensityMatrix> {
    evolve_observed(device, schedule, initial, |_| {})
}

/// Like [`evolve`], calling `observe` with the state after every timed
/// instruction (and after every idle gap).
pub fn evolve_observed<F>(
    device: &DeviceModel,
    schedule: &Schedule,
    initial: &DensityMatrix,
    mut observe: F,
) -> Result<DensityMatrix>
where
    F: FnMut(&DensityMatrix),
{
    device.check()?;
    validate(schedule, &device.constraints).map_err(Error::Constraints)?;

    let mut stepper = Stepper::new(device);
    let mut maps = PulseMaps::default();
    let mut rho = *initial.matrix();
    let mut clock = 0u64;
    let mut frame = 0.0f64;
    for inst in schedule.instructions() {
        if let ScheduleItem::PhaseShift(shift) = &inst.item {
            frame += shift.angle_rad;
            continue;
        }
        if inst.start_dt > clock {
            stepper.idle(&mut rho, inst.start_dt - clock);
            observe(&DensityMatrix::from_matrix_unchecked(rho));
        }
        maps.play(&mut stepper, &mut rho, &inst.item, frame);
        clock = inst.start_dt + inst.item.duration_dt();
        observe(&DensityMatrix::from_matrix_unchecked(rho));
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

/// Superoperator of a whole pulse on `[r00, r01, r10, r11]`.
type PulseMap = Matrix4<Complex64>;

/// Pulses that recur are replayed through the product of their per-sample
/// maps instead of sample by sample.
///
/// Decay commutes with Z rotations, so a pulse played in frame `theta` acts
/// as `Ad(Rz(theta)) M Ad(Rz(-theta))` with `M` the map in frame 0. A pulse
/// seen for the first time is simply stepped through.
#[derive(Default)]
struct PulseMaps {
    seen: Vec<(ScheduleItem, Option<PulseMap>)>,
}

impl PulseMaps {
    fn play(&mut self, stepper: &mut Stepper<'_>, rho: &mut Matrix2<Complex64>, item: &ScheduleItem, frame: f64) {
        let waveform = || item.waveform().expect("timed item");
        let Some(idx) = self.seen.iter().position(|(it, _)| it == item) else {
            self.seen.push((item.clone(), None));
            let rotated = if frame == 0.0 {
                waveform()
            } else {
                waveform().rotated(frame)
            };
            for &sample in rotated.samples() {
                stepper.drive(rho, sample);
            }
            return;
        };
        let map = *self.seen[idx].1.get_or_insert_with(|| {
            let samples = waveform();
            let mut m = PulseMap::zeros();
            for j in 0..4 {
                let mut basis = Matrix2::zeros();
                basis[(j / 2, j % 2)] = Complex64::new(1.0, 0.0);
                for &sample in samples.samples() {
                    stepper.drive(&mut basis, sample);
                }
                for i in 0..4 {
                    m[(i, j)] = basis[(i / 2, i % 2)];
                }
            }
            m
        });
        let turn = Complex64::from_polar(1.0, frame);
        let v = Vector4::new(rho[(0, 0)], rho[(0, 1)] * turn, rho[(1, 0)] * turn.conj(), rho[(1, 1)]);
        let out = map * v;
        *rho = Matrix2::new(out[0], out[1] * turn.conj(), out[2] * turn, out[3]);
    }
}

/// Undriven evolution for a number of dt samples.
pub fn free_evolve(device: &DeviceModel, initial: &DensityMatrix, samples: u64) -> DensityMatrix {
    let mut rho = *initial.matrix();
    Stepper::new(device).idle(&mut rho, samples);
    DensityMatrix::from_matrix_unchecked(rho)
}

/// Samples `shots` z-basis measurements with symmetric readout flips.
pub fn measure(device: &DeviceModel, rho: &DensityMatrix, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    rho.check(STATE_TOL)?;
    let p1 = rho.excited_population().clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ones = 0u64;
    for _ in 0..shots {
        let mut bit = rng.random::<f64>() < p1;
        if rng.random::<f64>() < device.readout_error {
            bit = !bit;
        }
        ones += bit as u64;
    }
    Ok(ShotResult {
        zeros: shots - ones,
        ones,
        shots,
    })
}

/// `rho_11`, without shot noise.
pub fn excited_population(rho: &DensityMatrix) -> f64 {
    rho.excited_population()
}
