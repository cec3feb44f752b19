//! Word-length sweeps: compile, simulate and score every enumerated word.

mod report;
mod threshold;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, Calibration, CalibrationTable, RabiScanConfig};
use crate::compiler::{
    lower_to_schedule, required_rx_angles, word_to_gates, CompilationOptions, DragSettings,
    GateCalibrationSet, GateOp, LoweringPath, OptLevel,
};
use crate::device::{
    evolve_observed, measure, named_preset, replication_preset, DensityMatrix, DeviceModel,
    DevicePreset,
};
use crate::error::{Error, Result};
use crate::pulse::{total_duration, Schedule};
use crate::qfa::{modp_expected_probability, ModpSpec};

pub use report::{
    emit_report, emit_thresholds, format_threshold_table, load_json_report, load_rows, mean_rows,
    write_rows_csv, ReportDoc, ReportFormat, CSV_COLUMNS,
};
pub use threshold::{
    reference_thresholds, threshold_table, MaxSupported, ThresholdEntry, ThresholdReport,
    DEFAULT_THRESHOLDS,
};

/// Number of recorded replication presets per path and residue.
pub const REPLICATION_PRESETS: u32 = 4;

/// Named preset or an inline device document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSource {
    Named(String),
    Inline(DevicePreset),
}

impl Default for DeviceSource {
    fn default() -> Self {
        DeviceSource::Named("average".into())
    }
}

impl DeviceSource {
    pub fn resolve(&self) -> Result<DeviceModel> {
        match self {
            DeviceSource::Named(name) => named_preset(name),
            DeviceSource::Inline(doc) => doc.clone().into_device(),
        }
    }
}

/// How the sweep obtains its calibration table when none is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Exact populations on the noise-free twin of the device.
    #[default]
    Ideal,
    /// Sampled shots on the noisy device.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: u64,
    pub k: u64,
    pub residues: Vec<u64>,
    pub max_len: u64,
    pub shots: u64,
    pub paths: Vec<LoweringPath>,
    pub opt_level: u8,
    pub device_preset: DeviceSource,
    pub noise: bool,
    pub seed: u64,
    pub replications: u32,
    pub calibration: CalibrationMode,
    pub thresholds: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 11,
            k: 1,
            residues: vec![0, 3],
            max_len: 1000,
            shots: 1024,
            paths: LoweringPath::ALL.to_vec(),
            opt_level: 0,
            device_preset: DeviceSource::default(),
            noise: true,
            seed: 0,
            replications: 1,
            calibration: CalibrationMode::default(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn spec(&self) -> Result<ModpSpec> {
        ModpSpec::new(self.p, self.k)
    }

    pub fn compilation(&self, path: LoweringPath) -> Result<CompilationOptions> {
        Ok(CompilationOptions {
            opt_level: OptLevel::try_from(self.opt_level)?,
            path,
        })
    }

    /// The configured device, with decay and readout error removed when noise is off.
    pub fn device(&self) -> Result<DeviceModel> {
        let d = self.device_preset.resolve()?;
        Ok(if self.noise { d } else { d.noiseless() })
    }

    /// Device for one replication (1-based).
    pub fn replication_device(&self, path: LoweringPath, residue: u64, replication: u32) -> Result<DeviceModel> {
        let d = if self.replications <= 1 {
            self.device_preset.resolve()?
        } else {
            replication_preset(path, residue, replication)?
        };
        Ok(if self.noise { d } else { d.noiseless() })
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.spec()?;
        OptLevel::try_from(self.opt_level)?;
        if let Some(r) = self.residues.iter().find(|&&r| r >= self.p) {
            return bad(format!("residue {r} is not below p = {}", self.p));
        }
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        if self.paths.is_empty() {
            return bad("at least one path is required".into());
        }
        if self.replications == 0 || self.replications > REPLICATION_PRESETS {
            return bad(format!(
                "replications must be between 1 and {REPLICATION_PRESETS}, got {}",
                self.replications
            ));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return bad(format!("threshold {t} is not in (0, 1]"));
        }
        self.device_preset.resolve()?;
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        config.check()?;
        Ok(config)
    }
}

/// All `w` in `[0, max_len]` whose residue mod `p` is listed, ascending.
pub fn word_lengths(p: u64, residues: &[u64], max_len: u64) -> Vec<u64> {
    let wanted: BTreeSet<u64> = residues.iter().copied().filter(|&r| r < p).collect();
    let mut out: Vec<u64> = wanted
        .iter()
        .flat_map(|&r| (r..=max_len).step_by(p as usize))
        .collect();
    out.sort_unstable();
    out
}

pub fn enumerate_word_lengths(config: &ExperimentConfig) -> Vec<u64> {
    word_lengths(config.p, &config.residues, config.max_len)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub word_len: u64,
    pub path: LoweringPath,
    pub opt_level: u8,
    pub residue: u64,
    pub expected_prob: f64,
    pub exact_prob: f64,
    pub shot_prob: f64,
    pub abs_error_exact: f64,
    pub abs_error_shot: f64,
    pub latency_ns: f64,
    /// 1-based; 0 marks a mean over replications.
    pub replication: u32,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub table: CalibrationTable,
    pub gates: GateCalibrationSet,
    /// Largest trace, Hermiticity or positivity defect seen in any
    /// intermediate state of any schedule.
    pub max_state_defect: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-row seed; independent of the order rows are computed in.
pub fn row_seed(seed: u64, path: LoweringPath, word_len: u64, replication: u32) -> u64 {
    let path_tag = match path {
        LoweringPath::DefaultDrag => 1,
        LoweringPath::CustomSquare => 2,
    };
    [path_tag, word_len, replication as u64]
        .into_iter()
        .fold(splitmix64(seed), |acc, v| splitmix64(acc ^ v))
}

/// Rabi scan and fit for a config, with the default scan settings.
pub fn calibrate_config(config: &ExperimentConfig) -> Result<Calibration> {
    let base = config.device_preset.resolve()?;
    let (device, scan) = match config.calibration {
        CalibrationMode::Ideal => (
            base.noiseless(),
            RabiScanConfig {
                exact_populations: true,
                ..RabiScanConfig::default()
            },
        ),
        CalibrationMode::Measured => (
            base,
            RabiScanConfig {
                shots_per_point: config.shots,
                ..RabiScanConfig::default()
            },
        ),
    };
    let device = DeviceModel {
        seed: config.seed,
        ..device
    };
    calibrate(&device, &scan)
}

pub fn calibrate_for(config: &ExperimentConfig) -> Result<CalibrationTable> {
    Ok(calibrate_config(config)?.table)
}

/// Gate calibrations covering every rotation the configured sweep needs.
pub fn gate_calibrations(
    config: &ExperimentConfig,
    table: &CalibrationTable,
    word_lens: &[u64],
) -> Result<GateCalibrationSet> {
    let spec = config.spec()?;
    let device = config.device()?;
    let mut angles = Vec::new();
    if config.paths.contains(&LoweringPath::CustomSquare) {
        let options = config.compilation(LoweringPath::CustomSquare)?;
        // level 0 repeats one rotation; level 1 needs one per residue present
        let representatives: BTreeSet<u64> = match options.opt_level {
            OptLevel::Zero => BTreeSet::from([1]),
            OptLevel::One => word_lens.iter().map(|w| w % spec.p()).collect(),
        };
        for w in representatives {
            angles.extend(required_rx_angles(&word_to_gates(&spec, w, &options)));
        }
    }
    GateCalibrationSet::design(table, &device, &DragSettings::default(), &angles)
}

fn state_defect(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let trace = (rho.trace() - num_complex::Complex64::new(1.0, 0.0)).norm();
    let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let negativity = (-rho.eigenvalues()[0]).max(0.0);
    trace.max(herm).max(negativity)
}

/// Everything computed for one word on one device.
#[derive(Debug, Clone)]
pub struct WordRun {
    pub row: SweepRow,
    pub gates: Vec<GateOp>,
    pub schedule: Schedule,
    pub final_state: DensityMatrix,
    pub max_state_defect: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_word_on(
    spec: &ModpSpec,
    options: &CompilationOptions,
    calibrations: &GateCalibrationSet,
    device: &DeviceModel,
    word_len: u64,
    shots: u64,
    replication: u32,
    seed: u64,
) -> Result<WordRun> {
    let gates = word_to_gates(spec, word_len, options);
    let schedule = lower_to_schedule(&gates, calibrations, device)?;
    let mut defect: f64 = 0.0;
    let rho = evolve_observed(device, &schedule, &DensityMatrix::ground(), |r| {
        defect = defect.max(state_defect(r));
    })?;
    defect = defect.max(state_defect(&rho));
    let exact_prob = rho.ground_population().clamp(0.0, 1.0);
    let shot_prob = measure(device, &rho, shots, seed)?.zero_fraction();
    let expected_prob = modp_expected_probability(*spec, word_len);
    let row = SweepRow {
        word_len,
        path: options.path,
        opt_level: options.opt_level.into(),
        residue: word_len % spec.p(),
        expected_prob,
        exact_prob,
        shot_prob,
        abs_error_exact: (expected_prob - exact_prob).abs(),
        abs_error_shot: (expected_prob - shot_prob).abs(),
        latency_ns: total_duration(&schedule).1,
        replication,
        seed,
    };
    Ok(WordRun {
        row,
        gates,
        schedule,
        final_state: rho,
        max_state_defect: defect,
    })
}

/// Simulates a single word with the config's device and seed.
pub fn simulate_word(
    config: &ExperimentConfig,
    calibrations: &GateCalibrationSet,
    word_len: u64,
    path: LoweringPath,
) -> Result<WordRun> {
    let spec = config.spec()?;
    let options = config.compilation(path)?;
    let device = config.replication_device(path, word_len % spec.p(), 1)?;
    let seed = row_seed(config.seed, path, word_len, 1);
    run_word_on(&spec, &options, calibrations, &device, word_len, config.shots, 1, seed).map_err(|e| {
        Error::Sweep {
            word_len,
            path: path.to_string(),
            source: Box::new(e),
        }
    })
}

/// Runs the sweep, calibrating first.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.check()?;
    let table = calibrate_for(config)?;
    run_sweep_with_table(config, &table)
}

/// Runs the sweep against an existing calibration table. Rows come back
/// sorted by replication, path and word length.
pub fn run_sweep_with_table(config: &ExperimentConfig, table: &CalibrationTable) -> Result<SweepOutput> {
    config.check()?;
    let spec = config.spec()?;
    let lens = enumerate_word_lengths(config);
    let gates = gate_calibrations(config, table, &lens)?;

    let keys: Vec<(u32, LoweringPath, u64)> = (1..=config.replications)
        .flat_map(|rep| {
            let lens = &lens;
            config
                .paths
                .iter()
                .flat_map(move |&path| lens.iter().map(move |&w| (rep, path, w)))
        })
        .collect();

    let results: Vec<(SweepRow, f64)> = keys
        .par_iter()
        .map(|&(rep, path, w)| {
            let wrap = |e: Error| Error::Sweep {
                word_len: w,
                path: path.to_string(),
                source: Box::new(e),
            };
            let options = config.compilation(path)?;
            let device = config.replication_device(path, w % spec.p(), rep).map_err(wrap)?;
            let seed = row_seed(config.seed, path, w, rep);
            let run = run_word_on(&spec, &options, &gates, &device, w, config.shots, rep, seed)
                .map_err(wrap)?;
            Ok((run.row, run.max_state_defect))
        })
        .collect::<Result<_>>()?;

    let max_state_defect = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut rows: Vec<SweepRow> = results.into_iter().map(|r| r.0).collect();
    sort_rows(&mut rows);
    Ok(SweepOutput {
        rows,
        table: table.clone(),
        gates,
        max_state_defect,
    })
}

pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        (a.replication, a.path, a.opt_level, a.word_len).cmp(&(b.replication, b.path, b.opt_level, b.word_len))
    });
}
