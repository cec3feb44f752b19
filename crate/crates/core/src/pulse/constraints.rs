//! Backend timing and amplitude limits.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Schedule, ScheduleItem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareConstraints {
    pub min_pulse_duration_dt: u64,
    pub granularity_dt: u64,
    /// Bound on `|I + iQ|` of every sample.
    pub max_amplitude: f64,
}

impl Default for HardwareConstraints {
    fn default() -> Self {
        Self {
            min_pulse_duration_dt: 80,
            granularity_dt: 16,
            max_amplitude: 1.0,
        }
    }
}

impl HardwareConstraints {
    pub fn is_valid(&self) -> bool {
        self.min_pulse_duration_dt > 0 && self.granularity_dt > 0 && self.max_amplitude > 0.0
    }

    /// True when a pulse of this length is allowed on its own.
    pub fn allows_duration(&self, duration_dt: u64) -> bool {
        duration_dt >= self.min_pulse_duration_dt && duration_dt % self.granularity_dt == 0
    }
}

/// One broken constraint; `index` is the instruction position in the schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BelowMinimum {
        index: usize,
        duration_dt: u64,
        min_dt: u64,
    },
    NotMultiple {
        index: usize,
        duration_dt: u64,
        granularity_dt: u64,
    },
    AmplitudeTooLarge {
        index: usize,
        sample: usize,
        magnitude: f64,
        max: f64,
    },
    Overlap {
        first: usize,
        second: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::BelowMinimum {
                index,
                duration_dt,
                min_dt,
            } => write!(
                f,
                "instruction {index}: duration {duration_dt}dt is below the minimum {min_dt}dt"
            ),
            Violation::NotMultiple {
                index,
                duration_dt,
                granularity_dt,
            } => write!(
                f,
                "instruction {index}: duration {duration_dt}dt is not a multiple of {granularity_dt}dt"
            ),
            Violation::AmplitudeTooLarge {
                index,
                sample,
                magnitude,
                max,
            } => write!(
                f,
                "instruction {index}: sample {sample} has magnitude {magnitude} above {max}"
            ),
            Violation::Overlap { first, second } => {
                write!(f, "instructions {first} and {second} overlap")
            }
        }
    }
}

/// Collects every constraint violation in the schedule. Phase shifts take no
/// time and are exempt from the duration rules.
pub fn validate(schedule: &Schedule, constraints: &HardwareConstraints) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    // (index, end) of the timed item that ends last so far
    let mut latest: Option<(usize, u64)> = None;
    for (index, inst) in schedule.instructions().iter().enumerate() {
        let waveform = match &inst.item {
            ScheduleItem::PhaseShift(_) => continue,
            ScheduleItem::Pulse(p) => super::sample_pulse(p),
            ScheduleItem::Waveform(w) => w.clone(),
        };
        let duration_dt = waveform.len() as u64;
        if duration_dt < constraints.min_pulse_duration_dt {
            violations.push(Violation::BelowMinimum {
                index,
                duration_dt,
                min_dt: constraints.min_pulse_duration_dt,
            });
        }
        if duration_dt % constraints.granularity_dt != 0 {
            violations.push(Violation::NotMultiple {
                index,
                duration_dt,
                granularity_dt: constraints.granularity_dt,
            });
        }
        if let Some((sample, magnitude)) = waveform
            .samples()
            .iter()
            .map(|s| s.norm())
            .enumerate()
            .find(|&(_, m)| !(m <= constraints.max_amplitude))
        {
            violations.push(Violation::AmplitudeTooLarge {
                index,
                sample,
                magnitude,
                max: constraints.max_amplitude,
            });
        }
        let end = inst.start_dt + duration_dt;
        if let Some((prev, prev_end)) = latest {
            if inst.start_dt < prev_end {
                violations.push(Violation::Overlap {
                    first: prev,
                    second: index,
                });
            }
            if end > prev_end {
                latest = Some((index, end));
            }
        } else {
            latest = Some((index, end));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{ParametricPulse, PhaseShift, SampleTime};

    fn one_square(duration: u64, amp: f64) -> Schedule {
        let mut s = Schedule::new(SampleTime::default());
        s.append(ScheduleItem::Pulse(ParametricPulse::square(amp, duration)))
            .unwrap();
        s
    }

    #[test]
    fn minimal_square_is_ok() {
        assert!(validate(&one_square(80, 0.068), &HardwareConstraints::default()).is_ok());
    }

    #[test]
    fn short_square_breaks_two_rules() {
        let v = validate(&one_square(72, 0.068), &HardwareConstraints::default()).unwrap_err();
        assert_eq!(
            v,
            vec![
                Violation::BelowMinimum {
                    index: 0,
                    duration_dt: 72,
                    min_dt: 80
                },
                Violation::NotMultiple {
                    index: 0,
                    duration_dt: 72,
                    granularity_dt: 16
                },
            ]
        );
    }

    #[test]
    fn empty_schedule_is_ok() {
        let s = Schedule::new(SampleTime::default());
        assert!(validate(&s, &HardwareConstraints::default()).is_ok());
    }

    #[test]
    fn amplitude_and_overlap_flagged() {
        let mut s = one_square(80, 1.5);
        s.push(40, ScheduleItem::Pulse(ParametricPulse::square(0.1, 80)))
            .unwrap();
        s.push(200, ScheduleItem::PhaseShift(PhaseShift::new(1.0))).unwrap();
        let v = validate(&s, &HardwareConstraints::default()).unwrap_err();
        assert!(matches!(v[0], Violation::AmplitudeTooLarge { index: 0, .. }));
        assert_eq!(v[1], Violation::Overlap { first: 0, second: 1 });
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn phase_shifts_exempt() {
        let mut s = Schedule::new(SampleTime::default());
        s.append(ScheduleItem::PhaseShift(PhaseShift::new(0.3))).unwrap();
        s.append(ScheduleItem::PhaseShift(PhaseShift::new(0.3))).unwrap();
        assert!(validate(&s, &HardwareConstraints::default()).is_ok());
    }
}
