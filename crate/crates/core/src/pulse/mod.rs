//! dt-quantized pulse schedules.
//!
//! A [`Schedule`] is a time-ordered list of instructions on a single drive
//! channel. Timed items are parametric pulses or raw waveforms; phase shifts
//! take no time and rotate the drive frame of every later pulse, which is how
//! virtual-Z rotations are realised.

mod constraints;
mod json;
mod shapes;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constraints::{validate, HardwareConstraints, Violation};
pub use shapes::{sample_pulse, ParametricPulse, Waveform, AMPLITUDE_SLACK};

pub(crate) use shapes::lifted_gaussian_envelope;

/// Default sample time; 320dt spans 71.11 ns on the reference backend.
pub const DEFAULT_DT_NS: f64 = 0.22222;

/// Nanoseconds per schedule sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SampleTime(f64);

impl SampleTime {
    pub fn new(dt_ns: f64) -> Result<Self> {
        if dt_ns > 0.0 && dt_ns.is_finite() {
            Ok(Self(dt_ns))
        } else {
            Err(Error::InvalidPulse(format!("sample time must be positive, got {dt_ns}")))
        }
    }

    pub fn dt_ns(&self) -> f64 {
        self.0
    }

    pub fn dt_seconds(&self) -> f64 {
        self.0 * 1e-9
    }
}

impl Default for SampleTime {
    fn default() -> Self {
        Self(DEFAULT_DT_NS)
    }
}

impl TryFrom<f64> for SampleTime {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SampleTime> for f64 {
    fn from(v: SampleTime) -> f64 {
        v.0
    }
}

/// Zero-duration rotation of the drive frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseShift {
    pub angle_rad: f64,
}

impl PhaseShift {
    pub fn new(angle_rad: f64) -> Self {
        Self { angle_rad }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleItem {
    Pulse(ParametricPulse),
    Waveform(Waveform),
    PhaseShift(PhaseShift),
}

impl ScheduleItem {
    pub fn duration_dt(&self) -> u64 {
        match self {
            ScheduleItem::Pulse(p) => p.duration_dt(),
            ScheduleItem::Waveform(w) => w.len() as u64,
            ScheduleItem::PhaseShift(_) => 0,
        }
    }

    pub fn is_timed(&self) -> bool {
        !matches!(self, ScheduleItem::PhaseShift(_))
    }

    /// Sampled waveform of a timed item; `None` for phase shifts.
    pub fn waveform(&self) -> Option<Waveform> {
        match self {
            ScheduleItem::Pulse(p) => Some(sample_pulse(p)),
            ScheduleItem::Waveform(w) => Some(w.clone()),
            ScheduleItem::PhaseShift(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub start_dt: u64,
    pub item: ScheduleItem,
}

/// Instructions on one drive channel with non-decreasing start times.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    sample_time: SampleTime,
    instructions: Vec<Instruction>,
}

impl Schedule {
    pub fn new(sample_time: SampleTime) -> Self {
        Self {
            sample_time,
            instructions: Vec::new(),
        }
    }

    pub fn sample_time(&self) -> SampleTime {
        self.sample_time
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Adds an item at an explicit start time. Starts must not decrease;
    /// overlaps are left for [`validate`] to report.
    pub fn push(&mut self, start_dt: u64, item: ScheduleItem) -> Result<()> {
        if let Some(last) = self.instructions.last() {
            if start_dt < last.start_dt {
                return Err(Error::OutOfOrder {
                    start_dt,
                    previous_dt: last.start_dt,
                });
            }
        }
        if let ScheduleItem::Pulse(p) = &item {
            p.check()?;
        }
        self.instructions.push(Instruction { start_dt, item });
        Ok(())
    }

    /// Adds an item right after the last timed item ends.
    pub fn append(&mut self, item: ScheduleItem) -> Result<()> {
        let start = self.end_dt().max(self.instructions.last().map_or(0, |i| i.start_dt));
        self.push(start, item)
    }

    /// End of the last timed item, in dt.
    pub fn end_dt(&self) -> u64 {
        self.instructions
            .iter()
            .filter(|i| i.item.is_timed())
            .map(|i| i.start_dt + i.item.duration_dt())
            .max()
            .unwrap_or(0)
    }

    pub fn to_json_string(&self) -> Result<String> {
        json::to_string(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        json::from_str(s)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = self.to_json_string()?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        json::from_str(&text)
    }
}

/// Total schedule length; phase shifts contribute nothing.
pub fn total_duration(schedule: &Schedule) -> (u64, f64) {
    let dt = schedule.end_dt();
    (dt, dt as f64 * schedule.sample_time.dt_ns())
}

/// Folds every phase shift into the pulses that follow it and drops the
/// shifts. Timing is unchanged.
pub fn resolve_phase_frames(schedule: &Schedule) -> Schedule {
    let mut frame = 0.0f64;
    let mut out = Schedule::new(schedule.sample_time);
    for inst in &schedule.instructions {
        let item = match &inst.item {
            ScheduleItem::PhaseShift(shift) => {
                frame += shift.angle_rad;
                continue;
            }
            ScheduleItem::Pulse(p) if frame != 0.0 => ScheduleItem::Pulse(p.rotated(frame)),
            ScheduleItem::Waveform(w) if frame != 0.0 => ScheduleItem::Waveform(w.rotated(frame)),
            other => other.clone(),
        };
        out.instructions.push(Instruction {
            start_dt: inst.start_dt,
            item,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sched(items: Vec<ScheduleItem>) -> Schedule {
        let mut s = Schedule::new(SampleTime::default());
        for item in items {
            s.append(item).unwrap();
        }
        s
    }

    fn square(a: f64, d: u64) -> ScheduleItem {
        ScheduleItem::Pulse(ParametricPulse::square(a, d))
    }

    fn shift(a: f64) -> ScheduleItem {
        ScheduleItem::PhaseShift(PhaseShift::new(a))
    }

    #[test]
    fn single_square_duration() {
        let (dt, ns) = total_duration(&sched(vec![square(0.068, 80)]));
        assert_eq!(dt, 80);
        assert!((ns - 17.78).abs() < 0.005, "{ns}");
    }

    #[test]
    fn thousand_default_symbols() {
        // each symbol: two 160dt pulses framed by three phase shifts
        let mut items = Vec::new();
        for _ in 0..1000 {
            items.push(shift(-PI / 2.0));
            items.push(square(0.1, 160));
            items.push(shift(1.0));
            items.push(square(0.1, 160));
            items.push(shift(-PI / 2.0));
        }
        let (dt, ns) = total_duration(&sched(items));
        assert_eq!(dt, 320_000);
        assert!((ns / 1000.0 - 71.11).abs() < 0.005, "{ns}");
    }

    #[test]
    fn phase_only_schedule_is_free() {
        assert_eq!(total_duration(&sched(vec![shift(0.1), shift(2.0)])), (0, 0.0));
    }

    #[test]
    fn push_rejects_decreasing_start() {
        let mut s = Schedule::new(SampleTime::default());
        s.push(100, square(0.1, 80)).unwrap();
        assert!(matches!(s.push(10, square(0.1, 80)), Err(Error::OutOfOrder { .. })));
    }

    #[test]
    fn resolve_without_shifts_is_identity() {
        let s = sched(vec![square(0.1, 80), square(0.2, 96)]);
        assert_eq!(resolve_phase_frames(&s), s);
    }

    #[test]
    fn resolve_pi_shift_negates() {
        let s = sched(vec![shift(PI), square(0.3, 80)]);
        let r = resolve_phase_frames(&s);
        assert_eq!(r.instructions().len(), 1);
        match &r.instructions()[0].item {
            ScheduleItem::Pulse(ParametricPulse::Square { amplitude, duration_dt }) => {
                assert_eq!(*duration_dt, 80);
                assert!((amplitude - Complex64::new(-0.3, 0.0)).norm() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trailing_shift_dropped() {
        let s = sched(vec![square(0.3, 80), shift(1.2)]);
        let r = resolve_phase_frames(&s);
        assert_eq!(r, sched(vec![square(0.3, 80)]));
    }

    fn arb_item() -> impl Strategy<Value = ScheduleItem> {
        prop_oneof![
            (-1.0f64..1.0, 1u64..8).prop_map(|(a, d)| square(a, d * 16)),
            (-7.0f64..7.0).prop_map(shift),
            (0.0f64..1.0, 1u64..8, 5.0f64..60.0).prop_map(|(a, d, s)| {
                ScheduleItem::Pulse(ParametricPulse::Drag {
                    peak: Complex64::new(a, 0.0),
                    duration_dt: d * 32,
                    sigma_dt: s,
                    beta: 0.5,
                })
            }),
        ]
    }

    proptest! {
        #[test]
        fn resolve_is_idempotent_and_keeps_timing(items in prop::collection::vec(arb_item(), 0..12)) {
            let s = sched(items);
            let once = resolve_phase_frames(&s);
            prop_assert_eq!(&resolve_phase_frames(&once), &once);
            prop_assert_eq!(total_duration(&once), total_duration(&s));
        }

        #[test]
        fn resolve_keeps_validation(items in prop::collection::vec(arb_item(), 0..12)) {
            let s = sched(items);
            let c = HardwareConstraints::default();
            prop_assert_eq!(validate(&resolve_phase_frames(&s), &c).is_ok(), validate(&s, &c).is_ok());
        }
    }
}
