use std::path::PathBuf;

use thiserror::Error;

use crate::pulse::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p = {0} is not prime")]
    NotPrime(u64),

    #[error("rotation multiplier k = {k} must lie in 1..={max}")]
    MultiplierOutOfRange { k: u64, max: u64 },

    #[error("symbol {symbol:?} at position {position} is not in the alphabet")]
    UnknownSymbol { symbol: char, position: usize },

    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),

    #[error("ensemble needs at least one multiplier")]
    EmptyEnsemble,

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("schedule instruction at {start_dt}dt precedes the previous start {previous_dt}dt")]
    OutOfOrder { start_dt: u64, previous_dt: u64 },

    #[error("schedule violates hardware constraints: {}", format_violations(.0))]
    Constraints(Vec<Violation>),

    #[error("invalid device model: {0}")]
    InvalidDevice(String),

    #[error("amplitude {amplitude} exceeds the allowed maximum {max}")]
    AmplitudeOutOfRange { amplitude: f64, max: f64 },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid Rabi scan config: {0}")]
    InvalidScan(String),

    #[error("fit needs at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("calibration needs at least 2 converged fits, got {0}")]
    TooFewFits(usize),

    #[error(
        "calibration is not monotone: amplitude {a0} -> {omega0} rad/s, amplitude {a1} -> {omega1} rad/s"
    )]
    NonMonotone {
        a0: f64,
        omega0: f64,
        a1: f64,
        omega1: f64,
    },

    #[error("{what} {value} is outside the calibrated range [{min}, {max}]")]
    OutOfCalibratedRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("cannot reach a pi/2 rotation: {0}")]
    UnreachableArea(String),

    #[error("optimization level {0} is unsupported (only 0 and 1 apply to single-qubit circuits)")]
    UnsupportedOptLevel(u8),

    #[error("no calibrated square pulse for Rx({theta}); run calibration for this angle first")]
    MissingCalibration { theta: f64 },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("word length {word_len} on path {path}: {source}")]
    Sweep {
        word_len: u64,
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown device preset {0:?}")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
