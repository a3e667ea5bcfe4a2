//! Dynamical-decoupling schedules and their execution on top of the noise
//! module.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::measures::DecayCurve;
use crate::noise::{default_dt, evolve_protocol, NoiseModel, SpinSystem, StateSeries};
use crate::states::collective_rotation;

const TIME_EPS: f64 = 1e-12;

/// Instantaneous rotation applied to all three qubits at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub angle: f64,
    pub phase: f64,
    /// Fractional over-rotation: the applied angle is `angle·(1 + flip_error)`.
    pub flip_error: f64,
}

impl Pulse {
    pub fn pi(phase: f64) -> Self {
        Self { angle: PI, phase, flip_error: 0.0 }
    }

    pub fn unitary(&self) -> ComplexMatrix {
        collective_rotation(&[1, 2, 3], self.angle * (1.0 + self.flip_error), self.phase)
            .expect("all qubits valid")
            .unitary
    }
}

/// One cycle: each pulse follows its delay, and `tail` closes the cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DDSchedule {
    pub name: String,
    pub events: Vec<(f64, Pulse)>,
    pub tail: f64,
    pub cycles: usize,
}

impl DDSchedule {
    /// Pulses at `phases`, spaced by `tau` with `tau/2` at both cycle edges.
    pub fn symmetric(name: &str, tau: f64, phases: &[f64]) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("inter-pulse delay {tau} must be positive")));
        }
        if phases.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one pulse".into()));
        }
        let events = phases
            .iter()
            .enumerate()
            .map(|(i, &p)| (if i == 0 { tau / 2.0 } else { tau }, Pulse::pi(p)))
            .collect();
        Ok(Self { name: name.to_string(), events, tail: tau / 2.0, cycles: 1 })
    }

    pub fn with_flip_error(mut self, flip_error: f64) -> Self {
        for (_, p) in &mut self.events {
            p.flip_error = flip_error;
        }
        self
    }

    pub fn with_cycles(mut self, cycles: usize) -> Self {
        self.cycles = cycles;
        self
    }

    pub fn pulse_count(&self) -> usize {
        self.events.len()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.events.iter().map(|(_, p)| p.phase).collect()
    }

    pub fn min_delay(&self) -> Option<f64> {
        self.events
            .iter()
            .map(|(d, _)| *d)
            .chain(std::iter::once(self.tail))
            .filter(|&d| d > 0.0)
            .reduce(f64::min)
    }

    /// Pulse offsets within one cycle.
    pub fn pulse_offsets(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.events
            .iter()
            .map(|(d, _)| {
                t += d;
                t
            })
            .collect()
    }

    /// Absolute times and unitaries of every pulse over `cycles` cycles.
    pub fn timeline(&self, t_final: f64) -> Result<Vec<(f64, ComplexMatrix)>> {
        let period = cycle_duration(self);
        let needed = period * self.cycles as f64;
        if needed > t_final + TIME_EPS {
            return Err(Error::ScheduleTooLong { needed, available: t_final });
        }
        let offsets = self.pulse_offsets();
        let unitaries: Vec<ComplexMatrix> = self.events.iter().map(|(_, p)| p.unitary()).collect();
        let mut out = Vec::with_capacity(self.cycles * self.events.len());
        for c in 0..self.cycles {
            let start = c as f64 * period;
            for (off, u) in offsets.iter().zip(&unitaries) {
                out.push((start + off, u.clone()));
            }
        }
        Ok(out)
    }

    /// Product of one cycle's pulses, ignoring the free evolution.
    pub fn cycle_unitary(&self) -> ComplexMatrix {
        self.events
            .iter()
            .fold(ComplexMatrix::identity(8), |acc, (_, p)| &p.unitary() * &acc)
    }

    /// `index,time_s,phase_rad,angle_rad` rows for one cycle.
    pub fn to_table(&self) -> String {
        let mut out = String::from("index,time_s,phase_rad,angle_rad\n");
        for (i, (t, (_, p))) in self.pulse_offsets().iter().zip(&self.events).enumerate() {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e}\n",
                i,
                t,
                p.phase,
                p.angle * (1.0 + p.flip_error)
            ));
        }
        out
    }
}

/// XY-8 followed by its π-shifted copy, time-symmetric about the centre.
pub fn build_xy16s(tau: f64) -> Result<DDSchedule> {
    let xy4 = [0.0, FRAC_PI_2, 0.0, FRAC_PI_2];
    let mut xy8: Vec<f64> = xy4.to_vec();
    xy8.extend(xy4.iter().rev());
    let mut phases = xy8.clone();
    phases.extend(xy8.iter().map(|p| p + PI));
    DDSchedule::symmetric("xy16s", tau, &phases)
}

fn kdd_block(phi: f64) -> [f64; 5] {
    [FRAC_PI_6 + phi, phi, FRAC_PI_2 + phi, phi, FRAC_PI_6 + phi]
}

/// Two phase-shifted five-pulse blocks, repeated twice.
pub fn build_kddxy(tau_k: f64) -> Result<DDSchedule> {
    let mut phases = Vec::with_capacity(20);
    for _ in 0..2 {
        phases.extend(kdd_block(0.0));
        phases.extend(kdd_block(FRAC_PI_2));
    }
    DDSchedule::symmetric("kddxy", tau_k, &phases)
}

/// Single-axis train of `pulses` π pulses about x, used as a baseline.
pub fn build_cpmg(tau: f64, pulses: usize) -> Result<DDSchedule> {
    DDSchedule::symmetric("cpmg", tau, &vec![0.0; pulses])
}

/// Free-evolution time of one cycle; pulses take no time.
pub fn cycle_duration(schedule: &DDSchedule) -> f64 {
    schedule.events.iter().map(|(d, _)| d).sum::<f64>() + schedule.tail
}

/// Outcome of a protected run: states and metrics at t = 0 and after each
/// completed cycle.
#[derive(Debug, Clone)]
pub struct ProtectedRun {
    pub series: StateSeries,
    pub curve: DecayCurve,
}

/// Cycle boundaries `0, T, 2T, ...` that fit into `total_time`.
pub fn cycle_sample_times(schedule: &DDSchedule, total_time: f64) -> Result<Vec<f64>> {
    let period = cycle_duration(schedule);
    if !(total_time >= period - TIME_EPS) {
        return Err(Error::ScheduleTooLong { needed: period, available: total_time });
    }
    let cycles = ((total_time + TIME_EPS) / period).floor() as usize;
    Ok((0..=cycles).map(|k| k as f64 * period).collect())
}

pub fn run_protected(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    schedule: &DDSchedule,
    total_time: f64,
) -> Result<ProtectedRun> {
    run_protected_with_dt(rho0, spins, noise, schedule, total_time, default_dt(spins, Some(schedule)))
}

pub fn run_protected_with_dt(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    schedule: &DDSchedule,
    total_time: f64,
    dt: f64,
) -> Result<ProtectedRun> {
    let times = cycle_sample_times(schedule, total_time)?;
    let repeated = schedule.clone().with_cycles(times.len() - 1);
    let series = evolve_protocol(rho0, spins, noise, Some(&repeated), &times, dt)?;
    let curve = DecayCurve::from_states(&series.times, &series.states, rho0)?;
    Ok(ProtectedRun { series, curve })
}

/// The same sampling without pulses, for paired comparisons.
pub fn run_unprotected(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    sample_times: &[f64],
    dt: f64,
) -> Result<ProtectedRun> {
    let series = evolve_protocol(rho0, spins, noise, None, sample_times, dt)?;
    let curve = DecayCurve::from_states(&series.times, &series.states, rho0)?;
    Ok(ProtectedRun { series, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::prepare_ghz;

    fn mod_pi(x: f64) -> f64 {
        x.rem_euclid(PI)
    }

    #[test]
    fn xy16_structure() {
        let s = build_xy16s(0.25e-3).unwrap();
        assert_eq!(s.pulse_count(), 16);
        let axes: Vec<f64> = s.phases().iter().map(|&p| mod_pi(p)).collect();
        assert_eq!(axes.iter().filter(|&&p| p.abs() < 1e-12).count(), 8);
        assert_eq!(axes.iter().filter(|&&p| (p - FRAC_PI_2).abs() < 1e-12).count(), 8);
        let mut rev = axes.clone();
        rev.reverse();
        assert!(axes.iter().zip(&rev).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((cycle_duration(&s) - 4.0e-3).abs() < 1e-15);
        // Delays are mirror images about the centre.
        let off = s.pulse_offsets();
        for i in 0..16 {
            assert!((off[i] + off[15 - i] - cycle_duration(&s)).abs() < 1e-15);
        }
    }

    #[test]
    fn kdd_structure() {
        let s = build_kddxy(2.5e-3).unwrap();
        assert_eq!(s.pulse_count(), 20);
        let p = s.phases();
        let first = [FRAC_PI_6, 0.0, FRAC_PI_2, 0.0, FRAC_PI_6];
        for i in 0..5 {
            assert!((p[i] - first[i]).abs() < 1e-15);
            assert!((p[i + 5] - first[i] - FRAC_PI_2).abs() < 1e-15);
        }
        assert!((cycle_duration(&s) - 50e-3).abs() < 1e-14);
    }

    #[test]
    fn single_event_duration() {
        let s = DDSchedule { name: "one".into(), events: vec![(0.7, Pulse::pi(0.0))], tail: 0.0, cycles: 1 };
        assert_eq!(cycle_duration(&s), 0.7);
    }

    #[test]
    fn cycles_are_net_identity() {
        for s in [build_xy16s(1e-3).unwrap(), build_kddxy(1e-3).unwrap(), build_cpmg(1e-3, 16).unwrap()] {
            let u = s.cycle_unitary();
            // Identity up to a global phase.
            let phase = u[(0, 0)];
            assert!((phase.norm() - 1.0).abs() < 1e-12);
            assert!(u.max_abs_diff(&ComplexMatrix::identity(8).scale(phase)) < 1e-12, "{}", s.name);
        }
    }

    #[test]
    fn table_lists_every_pulse() {
        let t = build_xy16s(1e-3).unwrap().to_table();
        assert_eq!(t.lines().count(), 17);
        assert!(t.starts_with("index,time_s,phase_rad,angle_rad"));
    }

    #[test]
    fn invalid_inputs() {
        assert!(build_xy16s(0.0).is_err());
        assert!(build_kddxy(-1.0).is_err());
        let s = build_xy16s(1e-3).unwrap();
        assert!(matches!(
            run_protected(&prepare_ghz(), &SpinSystem::default(), &NoiseModel::noiseless(), &s, 1e-3),
            Err(Error::ScheduleTooLong { .. })
        ));
        assert!(s.with_cycles(3).timeline(5e-3).is_err());
    }

    #[test]
    fn noiseless_run_keeps_state() {
        let s = build_xy16s(0.25e-3).unwrap();
        let g = prepare_ghz();
        let r = run_protected(&g, &SpinSystem::default(), &NoiseModel::noiseless(), &s, 0.02).unwrap();
        assert_eq!(r.curve.len(), 6);
        for f in &r.curve.fidelity {
            assert!((f - 1.0).abs() < 1e-9);
        }
    }
}
