//! Backend snapshots recorded alongside each reference job.
//!
//! Every (path, residue) pair was run on four dates; each run has its own
//! T1, T2 and readout error. The `average` preset is [`DeviceModel::default`].

use super::DeviceModel;
use crate::compiler::LoweringPath;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobRecord {
    pub path: LoweringPath,
    pub residue: u64,
    /// 1-based replication index, ordered by date.
    pub replication: u32,
    pub date_utc: &'static str,
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout_error: f64,
}

impl JobRecord {
    pub fn name(&self) -> String {
        format!(
            "{}-mod{}-rep{}",
            self.path.short_name(),
            self.residue,
            self.replication
        )
    }

    pub fn device(&self) -> DeviceModel {
        DeviceModel {
            t1_us: self.t1_us,
            t2_us: self.t2_us,
            readout_error: self.readout_error,
            ..DeviceModel::default()
        }
    }
}

const fn job(
    path: LoweringPath,
    residue: u64,
    replication: u32,
    date_utc: &'static str,
    t1_us: f64,
    t2_us: f64,
    readout_error: f64,
) -> JobRecord {
    JobRecord {
        path,
        residue,
        replication,
        date_utc,
        t1_us,
        t2_us,
        readout_error,
    }
}

use LoweringPath::{CustomSquare as Sq, DefaultDrag as Dd};

pub const JOB_RECORDS: [JobRecord; 16] = [
    job(Dd, 0, 1, "2023-08-15T17:10", 149.89, 45.57, 0.0166),
    job(Dd, 0, 2, "2023-08-16T10:40", 152.24, 46.15, 0.0155),
    job(Dd, 0, 3, "2023-08-16T19:21", 174.28, 46.15, 0.0155),
    job(Dd, 0, 4, "2023-08-17T17:30", 79.83, 41.78, 0.0197),
    job(Dd, 3, 1, "2023-08-15T17:10", 149.89, 45.57, 0.0166),
    job(Dd, 3, 2, "2023-08-16T10:40", 152.24, 46.15, 0.0155),
    job(Dd, 3, 3, "2023-08-16T19:21", 174.28, 46.15, 0.0155),
    job(Dd, 3, 4, "2023-08-17T20:40", 138.63, 41.78, 0.0197),
    job(Sq, 0, 1, "2023-08-15T19:20", 100.76, 45.57, 0.0166),
    job(Sq, 0, 2, "2023-08-16T10:40", 152.24, 46.15, 0.0155),
    job(Sq, 0, 3, "2023-08-16T19:21", 174.28, 46.15, 0.0197),
    job(Sq, 0, 4, "2023-08-17T20:40", 138.63, 41.78, 0.0166),
    job(Sq, 3, 1, "2023-08-15T19:20", 100.76, 45.57, 0.0166),
    job(Sq, 3, 2, "2023-08-16T10:40", 152.24, 46.15, 0.0155),
    job(Sq, 3, 3, "2023-08-16T19:21", 174.28, 46.15, 0.0155),
    job(Sq, 3, 4, "2023-08-17T20:40", 138.63, 41.78, 0.0197),
];

/// Device for one replication (1-based) of a path/residue pair. Residues
/// without a recorded job fall back to the residue-0 record.
pub fn replication_preset(path: LoweringPath, residue: u64, replication: u32) -> Result<DeviceModel> {
    let find = |res: u64| {
        JOB_RECORDS
            .iter()
            .find(|j| j.path == path && j.residue == res && j.replication == replication)
    };
    find(residue)
        .or_else(|| find(0))
        .map(JobRecord::device)
        .ok_or_else(|| Error::UnknownPreset(format!("{}-rep{replication}", path.short_name())))
}

pub fn preset_names() -> Vec<String> {
    std::iter::once("average".to_string())
        .chain(JOB_RECORDS.iter().map(JobRecord::name))
        .collect()
}

/// `average` or one of the `<qiskit|square>-mod<r>-rep<n>` job names.
pub fn named_preset(name: &str) -> Result<DeviceModel> {
    if name == "average" {
        return Ok(DeviceModel::default());
    }
    JOB_RECORDS
        .iter()
        .find(|j| j.name() == name)
        .map(JobRecord::device)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
