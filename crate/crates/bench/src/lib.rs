//! Shared fixtures for the benchmarks.

use qfa_pulse::calibration::{fit_rabi, RabiFit};
use qfa_pulse::compiler::{compile_word, GateCalibrationSet, LoweringPath};
use qfa_pulse::harness::{calibrate_for, enumerate_word_lengths, gate_calibrations};
use qfa_pulse::{CalibrationTable, DeviceModel, ExperimentConfig, Result, Schedule};

pub struct Fixture {
    pub config: ExperimentConfig,
    pub device: DeviceModel,
    pub table: CalibrationTable,
    pub gates: GateCalibrationSet,
}

impl Fixture {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let device = config.device()?;
        let table = calibrate_for(&config)?;
        let gates = gate_calibrations(&config, &table, &enumerate_word_lengths(&config))?;
        Ok(Self {
            config,
            device,
            table,
            gates,
        })
    }

    pub fn schedule(&self, word_len: u64, path: LoweringPath) -> Result<Schedule> {
        compile_word(
            &self.config.spec()?,
            word_len,
            &self.config.compilation(path)?,
            &self.gates,
            &self.device,
        )
    }
}

/// Noiseless Rabi curve sampled like a default duration scan.
pub fn rabi_series(rate_hz: f64, dt_s: f64) -> Vec<(f64, f64)> {
    (80..=2000)
        .step_by(16)
        .map(|d| {
            let t = d as f64 * dt_s;
            (t, (2.0 * std::f64::consts::PI * rate_hz * t + 0.3).cos().powi(2))
        })
        .collect()
}

pub fn fit(series: &[(f64, f64)]) -> RabiFit {
    fit_rabi(series).expect("clean series fits")
}
