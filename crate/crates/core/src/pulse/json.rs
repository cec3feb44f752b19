//! JSON document form of a schedule.
//!
//! ```json
//! {
//!   "dt_ns": 0.22222,
//!   "instructions": [
//!     {"start_dt": 0, "kind": "phase_shift", "angle_rad": 1.5707963267948966},
//!     {"start_dt": 0, "kind": "drag", "peak": [0.0876, 0.0], "duration_dt": 160, "sigma_dt": 40.0, "beta": 0.0},
//!     {"start_dt": 160, "kind": "square", "amplitude": [0.068, 0.0], "duration_dt": 80},
//!     {"start_dt": 240, "kind": "waveform", "samples": [[0.1, 0.0], [0.1, 0.0]]}
//!   ]
//! }
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Instruction, ParametricPulse, PhaseShift, SampleTime, Schedule, ScheduleItem, Waveform};
use crate::error::Result;

#[derive(Serialize, Deserialize)]
struct ScheduleDoc {
    dt_ns: f64,
    instructions: Vec<InstructionDoc>,
}

#[derive(Serialize, Deserialize)]
struct InstructionDoc {
    start_dt: u64,
    #[serde(flatten)]
    item: ItemDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ItemDoc {
    Square {
        amplitude: Complex64,
        duration_dt: u64,
    },
    LiftedGaussian {
        peak: Complex64,
        duration_dt: u64,
        sigma_dt: f64,
    },
    Drag {
        peak: Complex64,
        duration_dt: u64,
        sigma_dt: f64,
        beta: f64,
    },
    Waveform {
        samples: Vec<Complex64>,
    },
    PhaseShift {
        angle_rad: f64,
    },
}

impl From<&ScheduleItem> for ItemDoc {
    fn from(item: &ScheduleItem) -> Self {
        match item {
            ScheduleItem::Pulse(ParametricPulse::Square {
                amplitude,
                duration_dt,
            }) => ItemDoc::Square {
                amplitude: *amplitude,
                duration_dt: *duration_dt,
            },
            ScheduleItem::Pulse(ParametricPulse::LiftedGaussian {
                peak,
                duration_dt,
                sigma_dt,
            }) => ItemDoc::LiftedGaussian {
                peak: *peak,
                duration_dt: *duration_dt,
                sigma_dt: *sigma_dt,
            },
            ScheduleItem::Pulse(ParametricPulse::Drag {
                peak,
                duration_dt,
                sigma_dt,
                beta,
            }) => ItemDoc::Drag {
                peak: *peak,
                duration_dt: *duration_dt,
                sigma_dt: *sigma_dt,
                beta: *beta,
            },
            ScheduleItem::Waveform(w) => ItemDoc::Waveform {
                samples: w.samples().to_vec(),
            },
            ScheduleItem::PhaseShift(p) => ItemDoc::PhaseShift {
                angle_rad: p.angle_rad,
            },
        }
    }
}

impl ItemDoc {
    fn into_item(self) -> Result<ScheduleItem> {
        Ok(match self {
            ItemDoc::Square {
                amplitude,
                duration_dt,
            } => ScheduleItem::Pulse(ParametricPulse::Square {
                amplitude,
                duration_dt,
            }),
            ItemDoc::LiftedGaussian {
                peak,
                duration_dt,
                sigma_dt,
            } => ScheduleItem::Pulse(ParametricPulse::LiftedGaussian {
                peak,
                duration_dt,
                sigma_dt,
            }),
            ItemDoc::Drag {
                peak,
                duration_dt,
                sigma_dt,
                beta,
            } => ScheduleItem::Pulse(ParametricPulse::Drag {
                peak,
                duration_dt,
                sigma_dt,
                beta,
            }),
            ItemDoc::Waveform { samples } => ScheduleItem::Waveform(Waveform::new(samples)?),
            ItemDoc::PhaseShift { angle_rad } => ScheduleItem::PhaseShift(PhaseShift { angle_rad }),
        })
    }
}

pub(super) fn to_string(schedule: &Schedule) -> Result<String> {
    let doc = ScheduleDoc {
        dt_ns: schedule.sample_time.dt_ns(),
        instructions: schedule
            .instructions
            .iter()
            .map(|i: &Instruction| InstructionDoc {
                start_dt: i.start_dt,
                item: ItemDoc::from(&i.item),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub(super) fn from_str(s: &str) -> Result<Schedule> {
    let doc: ScheduleDoc = serde_json::from_str(s)?;
    let mut schedule = Schedule::new(SampleTime::new(doc.dt_ns)?);
    for inst in doc.instructions {
        schedule.push(inst.start_dt, inst.item.into_item()?)?;
    }
    Ok(schedule)
}
