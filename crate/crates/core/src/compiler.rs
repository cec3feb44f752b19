//! Word-to-gate compilation and gate-to-pulse lowering.
//!
//! A word `a^w` becomes `w` rotations `Rx(k 4 pi / p)`. On the
//! [`LoweringPath::DefaultDrag`] path each rotation is decomposed into the
//! native set `{Rz, SqrtX}` (two calibrated DRAG pulses and three frame
//! changes, 320 dt per symbol). On [`LoweringPath::CustomSquare`] each
//! rotation is a single calibrated 80 dt square pulse.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::{design_rotation_square, design_sqrt_x_drag, CalibrationTable};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::pulse::{validate, ParametricPulse, PhaseShift, Schedule, ScheduleItem};
use crate::qfa::ModpSpec;

/// Angles closer than this are treated as the same calibrated rotation.
pub const ANGLE_TOL: f64 = 1e-9;
pub const CUSTOM_SQUARE_DT: u64 = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoweringPath {
    #[default]
    DefaultDrag,
    CustomSquare,
}

impl LoweringPath {
    pub const ALL: [LoweringPath; 2] = [LoweringPath::DefaultDrag, LoweringPath::CustomSquare];

    pub fn as_str(&self) -> &'static str {
        match self {
            LoweringPath::DefaultDrag => "default_drag",
            LoweringPath::CustomSquare => "custom_square",
        }
    }

    /// Label used in job and preset names.
    pub fn short_name(&self) -> &'static str {
        match self {
            LoweringPath::DefaultDrag => "qiskit",
            LoweringPath::CustomSquare => "square",
        }
    }
}

impl fmt::Display for LoweringPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LoweringPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default_drag" | "qiskit" | "drag" => Ok(LoweringPath::DefaultDrag),
            "custom_square" | "square" => Ok(LoweringPath::CustomSquare),
            other => Err(Error::InvalidConfig(format!(
                "unknown path {other:?} (expected default_drag or custom_square)"
            ))),
        }
    }
}

/// Transpiler optimization level. Levels 2 and 3 only differ from 1 on
/// multi-qubit circuits and are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum OptLevel {
    #[default]
    Zero,
    One,
}

impl TryFrom<u8> for OptLevel {
    type Error = Error;

    fn try_from(level: u8) -> Result<Self> {
        match level {
            0 => Ok(OptLevel::Zero),
            1 => Ok(OptLevel::One),
            other => Err(Error::UnsupportedOptLevel(other)),
        }
    }
}

impl From<OptLevel> for u8 {
    fn from(level: OptLevel) -> u8 {
        match level {
            OptLevel::Zero => 0,
            OptLevel::One => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompilationOptions {
    pub opt_level: OptLevel,
    pub path: LoweringPath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Rx(f64),
    Rz(f64),
    SqrtX,
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateOp::Rx(t) => write!(f, "rx({t})"),
            GateOp::Rz(t) => write!(f, "rz({t})"),
            GateOp::SqrtX => f.write_str("sx"),
        }
    }
}

/// One gate per line.
pub fn format_gates(gates: &[GateOp]) -> String {
    gates.iter().map(|g| format!("{g}\n")).collect()
}

/// Maps an angle to `(-pi, pi]`. Rotations differing by `2 pi` agree up to
/// a global sign.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta - TAU * (theta / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// `Rx(theta)` as `Rz(-pi/2) SqrtX Rz(pi - theta) SqrtX Rz(-pi/2)`, in
/// application order. Equal to `Rx(theta)` up to global phase.
pub fn decompose_rx(theta: f64) -> [GateOp; 5] {
    [
        GateOp::Rz(-FRAC_PI_2),
        GateOp::SqrtX,
        GateOp::Rz(PI - theta),
        GateOp::SqrtX,
        GateOp::Rz(-FRAC_PI_2),
    ]
}

/// Gate list for the unary word of length `word_len`.
pub fn word_to_gates(spec: &ModpSpec, word_len: u64, options: &CompilationOptions) -> Vec<GateOp> {
    let theta = spec.rotation_angle();
    let logical: Vec<GateOp> = match options.opt_level {
        OptLevel::Zero => vec![GateOp::Rx(theta); word_len as usize],
        OptLevel::One => {
            // k w (4 pi / p) reduced exactly in integers first
            let turns = (spec.k() as u128 * word_len as u128 % spec.p() as u128) as f64;
            let total = reduce_angle(turns * 4.0 * PI / spec.p() as f64);
            if total.abs() < ANGLE_TOL {
                Vec::new()
            } else {
                vec![GateOp::Rx(total)]
            }
        }
    };
    let native = match options.path {
        LoweringPath::CustomSquare => logical,
        LoweringPath::DefaultDrag => logical
            .into_iter()
            .flat_map(|g| match g {
                GateOp::Rx(t) => decompose_rx(t).to_vec(),
                other => vec![other],
            })
            .collect(),
    };
    match options.opt_level {
        OptLevel::Zero => native,
        OptLevel::One => merge_rz(native),
    }
}

fn merge_rz(gates: Vec<GateOp>) -> Vec<GateOp> {
    let mut out: Vec<GateOp> = Vec::with_capacity(gates.len());
    for g in gates {
        match (out.last_mut(), g) {
            (Some(GateOp::Rz(a)), GateOp::Rz(b)) => *a = reduce_angle(*a + b),
            _ => out.push(g),
        }
    }
    out.retain(|g| !matches!(g, GateOp::Rz(a) if a.abs() < ANGLE_TOL));
    out
}

pub fn rx_matrix(theta: f64) -> Matrix2<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s),
        Complex64::new(0.0, -s),
        Complex64::new(c, 0.0),
    )
}

pub fn rz_matrix(lambda: f64) -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::from_polar(1.0, -lambda / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, lambda / 2.0),
    )
}

pub fn sqrt_x_matrix() -> Matrix2<Complex64> {
    let p = Complex64::new(0.5, 0.5);
    let m = Complex64::new(0.5, -0.5);
    Matrix2::new(p, m, m, p)
}

pub fn gate_matrix(gate: &GateOp) -> Matrix2<Complex64> {
    match *gate {
        GateOp::Rx(t) => rx_matrix(t),
        GateOp::Rz(l) => rz_matrix(l),
        GateOp::SqrtX => sqrt_x_matrix(),
    }
}

/// Product of the gates in application order (`G_n ... G_1`).
pub fn unitary_of(gates: &[GateOp]) -> Matrix2<Complex64> {
    gates
        .iter()
        .fold(Matrix2::identity(), |acc, g| gate_matrix(g) * acc)
}

/// Largest entry of `a - e^{i phi} b`, with `phi` chosen to align the
/// entries where `b` is largest. Zero when `a` and `b` differ by a global phase.
pub fn phase_distance(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> f64 {
    let (idx, _) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("2x2");
    let ratio = a.as_slice()[idx] / b.as_slice()[idx];
    let phase = if ratio.norm() > 0.0 {
        ratio / ratio.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    (a - b * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// DRAG shape of the calibrated `SqrtX` pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragSettings {
    pub duration_dt: u64,
    pub sigma_dt: f64,
    pub beta: f64,
}

impl Default for DragSettings {
    fn default() -> Self {
        Self {
            duration_dt: 160,
            sigma_dt: 40.0,
            beta: 0.0,
        }
    }
}

/// Calibrated pulses available to the lowering step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCalibrationSet {
    pub sqrt_x: ParametricPulse,
    /// Square pulses keyed by reduced rotation angle.
    custom_rx: Vec<(f64, ParametricPulse)>,
}

impl GateCalibrationSet {
    /// Designs the `SqrtX` pulse and one square pulse per requested angle.
    pub fn design(
        table: &CalibrationTable,
        device: &DeviceModel,
        drag: &DragSettings,
        rx_angles: &[f64],
    ) -> Result<Self> {
        let dt_ns = device.sample_time.dt_ns();
        let sqrt_x = design_sqrt_x_drag(table, drag.duration_dt, drag.sigma_dt, drag.beta, dt_ns)?;
        let mut set = Self {
            sqrt_x,
            custom_rx: Vec::new(),
        };
        for &theta in rx_angles {
            set.add_rx(table, device, theta)?;
        }
        Ok(set)
    }

    pub fn add_rx(&mut self, table: &CalibrationTable, device: &DeviceModel, theta: f64) -> Result<()> {
        let r = reduce_angle(theta);
        if self.lookup(r).is_none() {
            let pulse = design_rotation_square(table, r, CUSTOM_SQUARE_DT, device.sample_time.dt_ns())?;
            self.custom_rx.push((r, pulse));
        }
        Ok(())
    }

    fn lookup(&self, reduced: f64) -> Option<&ParametricPulse> {
        self.custom_rx
            .iter()
            .find(|(t, _)| (t - reduced).abs() < ANGLE_TOL)
            .map(|(_, p)| p)
    }

    pub fn rx_pulse(&self, theta: f64) -> Result<&ParametricPulse> {
        self.lookup(reduce_angle(theta))
            .ok_or(Error::MissingCalibration { theta })
    }

    pub fn custom_rx(&self) -> &[(f64, ParametricPulse)] {
        &self.custom_rx
    }
}

/// Distinct `Rx` angles in a gate list.
pub fn required_rx_angles(gates: &[GateOp]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for g in gates {
        if let GateOp::Rx(t) = g {
            let r = reduce_angle(*t);
            if !out.iter().any(|x| (x - r).abs() < ANGLE_TOL) {
                out.push(r);
            }
        }
    }
    out
}

/// Back-to-back schedule for a gate list. `Rz(lambda)` becomes a frame
/// change of `-lambda`; a pulse played after frame `phi` acts as
/// `Rz(phi) Rx Rz(-phi)`, which makes the frame changes implement the
/// requested `Rz` gates up to a final `Rz` that leaves populations alone.
pub fn lower_to_schedule(
    gates: &[GateOp],
    calibrations: &GateCalibrationSet,
    device: &DeviceModel,
) -> Result<Schedule> {
    let mut schedule = Schedule::new(device.sample_time);
    for g in gates {
        let item = match *g {
            GateOp::Rz(lambda) => ScheduleItem::PhaseShift(PhaseShift::new(-lambda)),
            GateOp::SqrtX => ScheduleItem::Pulse(calibrations.sqrt_x.clone()),
            GateOp::Rx(theta) => ScheduleItem::Pulse(calibrations.rx_pulse(theta)?.clone()),
        };
        schedule.append(item)?;
    }
    validate(&schedule, &device.constraints).map_err(Error::Constraints)?;
    Ok(schedule)
}

/// Word to validated schedule in one step.
pub fn compile_word(
    spec: &ModpSpec,
    word_len: u64,
    options: &CompilationOptions,
    calibrations: &GateCalibrationSet,
    device: &DeviceModel,
) -> Result<Schedule> {
    lower_to_schedule(&word_to_gates(spec, word_len, options), calibrations, device)
}
