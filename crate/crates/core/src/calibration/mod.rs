//! Rabi calibration of the drive line and pulse design from the result.
//!
//! A scan drives square pulses of increasing length at a handful of
//! amplitudes and records the excited fraction. Each series is fitted with
//! [`fit_rabi`]; the fitted rates form a [`CalibrationTable`] that maps drive
//! amplitude to Bloch rotation rate (odd in the amplitude) and back.

mod fit;

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{evolve, measure, DensityMatrix, DeviceModel};
use crate::error::{Error, Result};
use crate::pulse::{lifted_gaussian_envelope, ParametricPulse, Schedule, ScheduleItem};

pub use fit::{fit_rabi, RabiFit, MAX_ITERATIONS, MIN_FIT_POINTS, MIN_R_SQUARED, PARAM_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiScanConfig {
    pub amplitudes: Vec<f64>,
    pub duration_sweep_dt: Vec<u64>,
    pub shots_per_point: u64,
    /// Record exact excited populations instead of sampled shots.
    #[serde(default)]
    pub exact_populations: bool,
}

impl Default for RabiScanConfig {
    /// Ten amplitudes evenly spaced over [0.005, 0.3]; durations 80..=2000 dt in steps of 16.
    fn default() -> Self {
        let amplitudes = (0..10).map(|i| 0.005 + (0.3 - 0.005) * i as f64 / 9.0).collect();
        Self {
            amplitudes,
            duration_sweep_dt: (80..=2000).step_by(16).collect(),
            shots_per_point: 1024,
            exact_populations: false,
        }
    }
}

impl RabiScanConfig {
    pub fn check(&self, device: &DeviceModel) -> Result<()> {
        let c = &device.constraints;
        if let Some(a) = self
            .amplitudes
            .iter()
            .find(|a| !(a.abs() <= c.max_amplitude))
        {
            return Err(Error::InvalidScan(format!(
                "amplitude {a} exceeds {}",
                c.max_amplitude
            )));
        }
        if let Some(d) = self
            .duration_sweep_dt
            .iter()
            .find(|&&d| !c.allows_duration(d))
        {
            return Err(Error::InvalidScan(format!(
                "duration {d}dt must be >= {}dt and a multiple of {}dt",
                c.min_pulse_duration_dt, c.granularity_dt
            )));
        }
        if !self.exact_populations && self.shots_per_point == 0 {
            return Err(Error::InvalidScan("shots_per_point must be positive".into()));
        }
        Ok(())
    }
}

/// Excited fraction against pulse length (seconds) at one amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiSeries {
    pub amplitude: f64,
    pub points: Vec<(f64, f64)>,
}

/// Runs the square-pulse Rabi scan. Point `i` (amplitude-major) is sampled
/// with seed `device.seed ^ i`, so results do not depend on scheduling.
pub fn run_rabi_scan(device: &DeviceModel, config: &RabiScanConfig) -> Result<Vec<RabiSeries>> {
    config.check(device)?;
    let per_amp = config.duration_sweep_dt.len();
    config
        .amplitudes
        .par_iter()
        .enumerate()
        .map(|(ai, &amplitude)| {
            let points = config
                .duration_sweep_dt
                .iter()
                .enumerate()
                .map(|(di, &duration)| {
                    let mut schedule = Schedule::new(device.sample_time);
                    schedule.append(ScheduleItem::Pulse(ParametricPulse::square(amplitude, duration)))?;
                    let rho = evolve(device, &schedule, &DensityMatrix::ground())?;
                    let fraction = if config.exact_populations {
                        rho.excited_population()
                    } else {
                        let seed = device.seed ^ (ai * per_amp + di) as u64;
                        measure(device, &rho, config.shots_per_point, seed)?.one_fraction()
                    };
                    Ok((duration as f64 * device.dt_seconds(), fraction))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RabiSeries { amplitude, points })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub amplitude: f64,
    pub omega_rad_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub amplitude: f64,
    pub rate_hz: f64,
    pub phase: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Amplitude to angular-rate map over `[-a_max, a_max]`, piecewise linear
/// through the origin and the calibrated points, odd by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableDoc", into = "TableDoc")]
pub struct CalibrationTable {
    points: Vec<CalibrationPoint>,
    fit_meta: Vec<FitMeta>,
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    points: Vec<CalibrationPoint>,
    #[serde(default)]
    fit_meta: Vec<FitMeta>,
}

impl TryFrom<TableDoc> for CalibrationTable {
    type Error = Error;

    fn try_from(doc: TableDoc) -> Result<Self> {
        let mut table = CalibrationTable::from_points(doc.points)?;
        table.fit_meta = doc.fit_meta;
        Ok(table)
    }
}

impl From<CalibrationTable> for TableDoc {
    fn from(t: CalibrationTable) -> Self {
        Self {
            points: t.points,
            fit_meta: t.fit_meta,
        }
    }
}

impl CalibrationTable {
    /// Builds a table from positive-amplitude points; they must be strictly
    /// increasing in both amplitude and rate once sorted.
    pub fn from_points(mut points: Vec<CalibrationPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewFits(points.len()));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.amplitude > 0.0 && p.amplitude.is_finite() && p.omega_rad_per_s.is_finite()))
        {
            return Err(Error::InvalidScan(format!(
                "calibration point at amplitude {} is unusable",
                p.amplitude
            )));
        }
        points.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
        let origin = CalibrationPoint {
            amplitude: 0.0,
            omega_rad_per_s: 0.0,
        };
        for pair in std::iter::once(&origin).chain(&points).collect::<Vec<_>>().windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if !(hi.amplitude > lo.amplitude && hi.omega_rad_per_s > lo.omega_rad_per_s) {
                return Err(Error::NonMonotone {
                    a0: lo.amplitude,
                    omega0: lo.omega_rad_per_s,
                    a1: hi.amplitude,
                    omega1: hi.omega_rad_per_s,
                });
            }
        }
        Ok(Self {
            points,
            fit_meta: Vec::new(),
        })
    }

    pub fn points(&self) -> &[CalibrationPoint] {
        &self.points
    }

    pub fn fit_meta(&self) -> &[FitMeta] {
        &self.fit_meta
    }

    pub fn max_amplitude(&self) -> f64 {
        self.points.last().expect("non-empty").amplitude
    }

    pub fn max_angular_rate(&self) -> f64 {
        self.points.last().expect("non-empty").omega_rad_per_s
    }

    fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once((0.0, 0.0)).chain(self.points.iter().map(|p| (p.amplitude, p.omega_rad_per_s)))
    }

    /// Interpolated angular rate (rad/s) at a drive amplitude.
    pub fn angular_rate(&self, amplitude: f64) -> Result<f64> {
        let a = amplitude.abs();
        let max = self.max_amplitude();
        if !(a <= max) {
            return Err(Error::OutOfCalibratedRange {
                what: "amplitude",
                value: amplitude,
                min: -max,
                max,
            });
        }
        let omega = interpolate(self.knots(), a);
        Ok(if amplitude < 0.0 { -omega } else { omega })
    }

    /// Inverse lookup; no extrapolation past the calibrated range.
    pub fn amp_for_angular_rate(&self, target: f64) -> Result<f64> {
        let w = target.abs();
        let max = self.max_angular_rate();
        if !(w <= max) {
            return Err(Error::OutOfCalibratedRange {
                what: "angular rate",
                value: target,
                min: -max,
                max,
            });
        }
        let a = interpolate(self.knots().map(|(a, w)| (w, a)), w);
        Ok(if target < 0.0 { -a } else { a })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }
}

/// Piecewise-linear interpolation over increasing knots; `x` must be within them.
fn interpolate(knots: impl Iterator<Item = (f64, f64)>, x: f64) -> f64 {
    let mut prev: Option<(f64, f64)> = None;
    for (kx, ky) in knots {
        if let Some((px, py)) = prev {
            if x <= kx {
                return py + (ky - py) * (x - px) / (kx - px);
            }
        } else if x <= kx {
            return ky;
        }
        prev = Some((kx, ky));
    }
    prev.map_or(0.0, |(_, y)| y)
}

/// Table from converged fits; failed fits are kept only as metadata.
pub fn build_table(fits: &[(f64, RabiFit)]) -> Result<CalibrationTable> {
    let points: Vec<CalibrationPoint> = fits
        .iter()
        .filter(|(a, f)| f.converged && *a > 0.0)
        .map(|&(amplitude, f)| CalibrationPoint {
            amplitude,
            omega_rad_per_s: f.angular_rate(),
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::TooFewFits(points.len()));
    }
    let mut table = CalibrationTable::from_points(points)?;
    table.fit_meta = fits
        .iter()
        .map(|&(amplitude, f)| FitMeta {
            amplitude,
            rate_hz: f.rate_hz,
            phase: f.phase_rad,
            residual: f.residual,
            converged: f.converged,
        })
        .collect();
    Ok(table)
}

/// Fitted calibration together with the raw scan it came from.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub table: CalibrationTable,
    pub series: Vec<RabiSeries>,
    pub fits: Vec<(f64, RabiFit)>,
}

/// Scan, fit every amplitude, and build the table.
pub fn calibrate(device: &DeviceModel, config: &RabiScanConfig) -> Result<Calibration> {
    let series = run_rabi_scan(device, config)?;
    let fits = series
        .iter()
        .map(|s| Ok((s.amplitude, fit_rabi(&s.points)?)))
        .collect::<Result<Vec<_>>>()?;
    let table = build_table(&fits)?;
    Ok(Calibration {
        table,
        series,
        fits,
    })
}

/// Square pulse rotating by `theta_rad` about the drive axis in `duration_dt` samples.
pub fn design_rotation_square(
    table: &CalibrationTable,
    theta_rad: f64,
    duration_dt: u64,
    dt_ns: f64,
) -> Result<ParametricPulse> {
    let seconds = duration_dt as f64 * dt_ns * 1e-9;
    let omega = theta_rad / seconds;
    let amplitude = table.amp_for_angular_rate(omega)?;
    Ok(ParametricPulse::square(amplitude, duration_dt))
}

/// DRAG pulse whose in-phase envelope integrates to a pi/2 rotation; the
/// peak is found by bisection through the table.
pub fn design_sqrt_x_drag(
    table: &CalibrationTable,
    duration_dt: u64,
    sigma_dt: f64,
    beta: f64,
    dt_ns: f64,
) -> Result<ParametricPulse> {
    let dt = dt_ns * 1e-9;
    let (envelope, _) = lifted_gaussian_envelope(duration_dt, sigma_dt);
    let area = |peak: f64| -> Result<f64> {
        envelope
            .iter()
            .map(|&e| Ok(table.angular_rate(peak * e)? * dt))
            .sum()
    };
    let target = PI / 2.0;
    let (mut lo, mut hi) = (0.0, table.max_amplitude());
    let reachable = area(hi)?;
    if reachable < target {
        return Err(Error::UnreachableArea(format!(
            "largest calibrated peak {hi} gives {reachable:.6} rad"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if area(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let peak = if (area(lo)? - target).abs() <= (area(hi)? - target).abs() {
        lo
    } else {
        hi
    };
    let pulse = ParametricPulse::Drag {
        peak: num_complex::Complex64::new(peak, 0.0),
        duration_dt,
        sigma_dt,
        beta,
    };
    pulse.check()?;
    Ok(pulse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{TransferFunction, ANCHOR_RABI_HZ};
    use crate::pulse::{sample_pulse, DEFAULT_DT_NS};

    fn exact_table(transfer: TransferFunction, amps: &[f64]) -> CalibrationTable {
        CalibrationTable::from_points(
            amps.iter()
                .map(|&a| CalibrationPoint {
                    amplitude: a,
                    omega_rad_per_s: transfer.angular_rate(a),
                })
                .collect(),
        )
        .unwrap()
    }

    fn anchored_table() -> CalibrationTable {
        exact_table(TransferFunction::anchored(), &RabiScanConfig::default().amplitudes)
    }

    fn noiseless_population(pulses: &[ParametricPulse]) -> f64 {
        let device = DeviceModel::default().noiseless();
        let mut s = Schedule::new(device.sample_time);
        for p in pulses {
            s.append(ScheduleItem::Pulse(p.clone())).unwrap();
        }
        evolve(&device, &s, &DensityMatrix::ground()).unwrap().excited_population()
    }

    #[test]
    fn default_scan_config() {
        let c = RabiScanConfig::default();
        assert_eq!(c.amplitudes.len(), 10);
        assert_eq!(c.amplitudes[0], 0.005);
        assert!((c.amplitudes[9] - 0.3).abs() < 1e-15);
        assert_eq!(c.duration_sweep_dt.first(), Some(&80));
        assert_eq!(c.duration_sweep_dt.last(), Some(&2000));
        c.check(&DeviceModel::default()).unwrap();
    }

    #[test]
    fn scan_rejects_bad_points() {
        let d = DeviceModel::default();
        let mut c = RabiScanConfig::default();
        c.duration_sweep_dt.push(90);
        assert!(matches!(run_rabi_scan(&d, &c), Err(Error::InvalidScan(m)) if m.contains("90dt")));
        let mut c = RabiScanConfig::default();
        c.amplitudes.push(1.5);
        assert!(run_rabi_scan(&d, &c).is_err());
    }

    #[test]
    fn zero_amplitude_scan_reads_readout_error() {
        let d = DeviceModel::default();
        let c = RabiScanConfig {
            amplitudes: vec![0.0],
            ..RabiScanConfig::default()
        };
        let series = run_rabi_scan(&d, &c).unwrap();
        let pts = &series[0].points;
        let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        // T1 decay from |0> adds nothing; only flips
        let sigma = (0.0166 * (1.0 - 0.0166) / (1024.0 * pts.len() as f64)).sqrt();
        assert!((mean - 0.0166).abs() < 4.0 * sigma, "{mean}");
    }

    #[test]
    fn noiseless_scan_is_sin_squared() {
        let d = DeviceModel::default().noiseless();
        let c = RabiScanConfig {
            amplitudes: vec![0.068],
            exact_populations: true,
            ..RabiScanConfig::default()
        };
        let omega = d.transfer.angular_rate(0.068);
        for &(t, y) in &run_rabi_scan(&d, &c).unwrap()[0].points {
            assert!((y - (omega * t / 2.0).sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn anchored_amplitude_oscillation_period() {
        let d = DeviceModel::default();
        let c = RabiScanConfig {
            amplitudes: vec![0.068],
            ..RabiScanConfig::default()
        };
        let s = run_rabi_scan(&d, &c).unwrap();
        let fit = fit_rabi(&s[0].points).unwrap();
        assert!(fit.converged);
        let period = 2.0 * PI / fit.angular_rate();
        // 1 / 10.23 MHz = 97.75 ns
        assert!((period - 1.0 / ANCHOR_RABI_HZ).abs() / (1.0 / ANCHOR_RABI_HZ) < 0.01, "{period}");
    }

    #[test]
    fn linear_device_table_within_one_percent() {
        let d = DeviceModel::default();
        let cal = calibrate(&d, &RabiScanConfig::default()).unwrap();
        assert!(cal.table.points().len() >= 8, "{:?}", cal.table.fit_meta());
        // below ~0.03 the scan spans less than one period and A trades off against the rate
        for p in cal.table.points().iter().filter(|p| p.amplitude > 0.03) {
            let truth = d.transfer.angular_rate(p.amplitude);
            assert!(((p.omega_rad_per_s - truth) / truth).abs() < 0.01, "{p:?}");
        }
        for a in [0.05, 0.068, 0.15, 0.29] {
            let truth = d.transfer.angular_rate(a);
            assert!(((cal.table.angular_rate(a).unwrap() - truth) / truth).abs() < 0.01);
        }
    }

    #[test]
    fn table_needs_two_fits() {
        let fit = fit_rabi(
            &(80..=2000)
                .step_by(16)
                .map(|d| {
                    let t = d as f64 * 0.22222e-9;
                    (t, (2.0 * PI * 5e6 * t).cos().powi(2))
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(matches!(build_table(&[(0.1, fit)]), Err(Error::TooFewFits(1))));
        let mut bad = fit;
        bad.converged = false;
        assert!(matches!(build_table(&[(0.1, fit), (0.2, bad)]), Err(Error::TooFewFits(1))));
    }

    #[test]
    fn table_rejects_non_monotone() {
        let pts = vec![
            CalibrationPoint {
                amplitude: 0.1,
                omega_rad_per_s: 2.0,
            },
            CalibrationPoint {
                amplitude: 0.2,
                omega_rad_per_s: 1.0,
            },
        ];
        match CalibrationTable::from_points(pts) {
            Err(Error::NonMonotone { a0, a1, .. }) => assert_eq!((a0, a1), (0.1, 0.2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_is_odd_and_bounded() {
        let t = anchored_table();
        for a in [0.001, 0.03, 0.068, 0.2, 0.3] {
            assert_eq!(t.angular_rate(-a).unwrap(), -t.angular_rate(a).unwrap());
        }
        assert_eq!(t.amp_for_angular_rate(0.0).unwrap(), 0.0);
        assert!(matches!(
            t.amp_for_angular_rate(t.max_angular_rate() * 1.01),
            Err(Error::OutOfCalibratedRange { .. })
        ));
        assert!(t.angular_rate(0.31).is_err());
        let w = t.angular_rate(0.068).unwrap();
        assert!((t.amp_for_angular_rate(w).unwrap() - 0.068).abs() < 1e-12);
        assert!((t.amp_for_angular_rate(-w).unwrap() + 0.068).abs() < 1e-12);
    }

    #[test]
    fn table_json_round_trip() {
        let d = DeviceModel::default().noiseless();
        let cal = calibrate(
            &d,
            &RabiScanConfig {
                amplitudes: vec![0.05, 0.1, 0.2],
                exact_populations: true,
                ..RabiScanConfig::default()
            },
        )
        .unwrap();
        let text = cal.table.to_json_string().unwrap();
        assert!(text.contains("omega_rad_per_s") && text.contains("fit_meta"));
        let back = CalibrationTable::from_json_str(&text).unwrap();
        assert_eq!(back, cal.table);
        let bad = r#"{"points": [{"amplitude": 0.1, "omega_rad_per_s": 5.0}, {"amplitude": 0.2, "omega_rad_per_s": 4.0}]}"#;
        assert!(CalibrationTable::from_json_str(bad).is_err());
    }

    #[test]
    fn rotation_square_cases() {
        let t = anchored_table();
        let p = design_rotation_square(&t, 4.0 * PI / 11.0, 80, DEFAULT_DT_NS).unwrap();
        match p {
            ParametricPulse::Square { amplitude, duration_dt } => {
                assert_eq!(duration_dt, 80);
                // (4pi/11) / (80 * 0.22222 ns) / (2pi * 150.44 MHz) = 0.0679826 (high precision)
                assert!((amplitude.re - 0.067_982_551_326_446_35).abs() < 1e-12);
                assert!((amplitude.re - 0.068).abs() < 0.005);
            }
            other => panic!("{other:?}"),
        }
        let zero = design_rotation_square(&t, 0.0, 80, DEFAULT_DT_NS).unwrap();
        assert_eq!(zero, ParametricPulse::square(0.0, 80));
        // 2pi in 80dt needs 2pi * 56.25 MHz, above the 0.3 amplitude ceiling
        assert!(matches!(
            design_rotation_square(&t, 2.0 * PI, 80, DEFAULT_DT_NS),
            Err(Error::OutOfCalibratedRange { .. })
        ));
    }

    #[test]
    fn rotation_square_round_trip() {
        let t = anchored_table();
        for theta in [PI / 4.0, 4.0 * PI / 11.0, PI / 2.0, PI] {
            let p = design_rotation_square(&t, theta, 80, DEFAULT_DT_NS).unwrap();
            let pop = noiseless_population(&[p]);
            let achieved = 2.0 * pop.sqrt().asin();
            assert!(((achieved - theta) / theta).abs() < 0.005, "{theta} {achieved}");
        }
    }

    #[test]
    fn sqrt_x_drag_cases() {
        let t = anchored_table();
        let p = design_sqrt_x_drag(&t, 160, 40.0, 0.0, DEFAULT_DT_NS).unwrap();
        let peak = match p {
            ParametricPulse::Drag { peak, .. } => peak.re,
            _ => unreachable!(),
        };
        // (pi/2) / (2pi * slope * dt * sum(envelope)), envelope sum 85.35296100 (high precision)
        let expected = 0.087_613_605_410_826_27;
        assert!((peak - expected).abs() < 1e-10, "{peak}");
        assert!((noiseless_population(std::slice::from_ref(&p)) - 0.5).abs() < 1e-6);
        assert!((noiseless_population(&[p.clone(), p]) - 1.0).abs() < 1e-6);

        let short = design_sqrt_x_drag(&t, 80, 20.0, 0.0, DEFAULT_DT_NS).unwrap();
        assert_eq!(sample_pulse(&short).len(), 80);
        assert!((noiseless_population(&[short]) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn sqrt_x_drag_cubic_device() {
        let transfer = TransferFunction {
            slope_hz_per_amp: 150e6,
            cubic_hz_per_amp3: -300e6,
        };
        let amps: Vec<f64> = (1..=60).map(|i| i as f64 * 0.005).collect();
        let t = exact_table(transfer, &amps);
        let p = design_sqrt_x_drag(&t, 160, 40.0, 0.0, DEFAULT_DT_NS).unwrap();
        let device = DeviceModel {
            transfer,
            ..DeviceModel::default()
        }
        .noiseless();
        let mut s = Schedule::new(device.sample_time);
        s.append(ScheduleItem::Pulse(p)).unwrap();
        let pop = evolve(&device, &s, &DensityMatrix::ground()).unwrap().excited_population();
        // interpolation error of the 0.005-spaced table on a cubic curve
        assert!((pop - 0.5).abs() < 1e-3, "{pop}");
    }

    #[test]
    fn unreachable_area() {
        let t = exact_table(TransferFunction::anchored(), &[0.001, 0.002]);
        assert!(matches!(
            design_sqrt_x_drag(&t, 160, 40.0, 0.0, DEFAULT_DT_NS),
            Err(Error::UnreachableArea(_))
        ));
    }
}
