//! Simulation of a one-qubit measure-once quantum automaton for `MOD^p`
//! executed as pulse schedules on a noisy transmon model.
//!
//! The pipeline runs word -> gates ([`compiler`]) -> pulse schedule
//! ([`pulse`]) -> density-matrix evolution and readout ([`device`]). Pulse
//! amplitudes come from a Rabi calibration ([`calibration`]), and
//! [`harness`] sweeps word lengths to find the longest word each lowering
//! path recognises within an error budget.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting guards

pub mod calibration;
pub mod compiler;
pub mod device;
pub mod error;
pub mod harness;
pub mod pulse;
pub mod qfa;

pub use calibration::{CalibrationTable, RabiFit, RabiScanConfig};
pub use compiler::{CompilationOptions, GateCalibrationSet, GateOp, LoweringPath, OptLevel};
pub use device::{DensityMatrix, DeviceModel, ShotResult, TransferFunction};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, SweepRow, ThresholdReport};
pub use pulse::{ParametricPulse, Schedule, ScheduleItem, Waveform};
pub use qfa::{ModpSpec, Mo1Qfa};
