//! Relative angles, synchronization diagnostics and steady-state tables.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::netmodel::{control_effort, electrical_power, power_at, ControlLaw, NetworkSpec, PowerSchedule};
use crate::simulate::Trajectory;

/// Default frequency band for settling, in rad/s.
pub const SETTLING_BAND: f64 = 0.005;

/// Angles relative to the inertia-weighted mean angle (center of inertia).
pub fn coi_relative(theta: &[f64], inertia: &[f64]) -> Vec<f64> {
    debug_assert_eq!(theta.len(), inertia.len());
    let total: f64 = inertia.iter().sum();
    let coi = theta.iter().zip(inertia).map(|(t, m)| t * m).sum::<f64>() / total;
    theta.iter().map(|t| t - coi).collect()
}

/// Kuramoto order parameter `|mean(exp(j theta))|`; 1 means phase locked.
///
/// Returns 0 for an empty slice.
pub fn order_parameter(theta: &[f64]) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    let (re, im) = theta.iter().fold((0.0, 0.0), |(re, im), &t| (re + libm::cos(t), im + libm::sin(t)));
    let n = theta.len() as f64;
    libm::hypot(re / n, im / n)
}

/// Largest pairwise spread of a set of angles.
pub fn max_separation(theta: &[f64]) -> f64 {
    let (lo, hi) = theta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if theta.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransientMetrics {
    /// Largest `|omega_i|` over samples at or after the step, rad/s.
    pub peak_freq_dev: f64,
    /// Time from the step until the last excursion outside the band, s.
    pub settling_time: f64,
    /// False when the final sample is still outside the band.
    pub settled: bool,
    /// Max pairwise spread of the COI-relative angles at the end, rad.
    pub final_separation: f64,
    /// Largest `|u_i|` over the whole run, pu.
    pub max_control: f64,
    /// Largest `|u_i|` at the end, pu.
    pub final_control: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn transient_metrics(traj: &Trajectory, t0: f64, band: f64) -> Result<TransientMetrics> {
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let mut peak = 0.0_f64;
    let mut last_out: Option<f64> = None;
    let mut last_out_index = 0;
    let mut max_control = 0.0_f64;
    for (k, (&t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let w = max_abs(state.omega());
        if t >= t0 {
            peak = peak.max(w);
        }
        if w > band {
            last_out = Some(t);
            last_out_index = k;
        }
        max_control = max_control.max(max_abs(&traj.control[k]));
    }
    let last = traj.len() - 1;
    let settled = last_out.is_none() || last_out_index < last;
    let settling_time = last_out.map_or(0.0, |t| (t - t0).max(0.0));
    let final_state = &traj.states[last];
    let final_separation = max_separation(&coi_relative(final_state.theta(), &traj.inertia));

    Ok(TransientMetrics {
        peak_freq_dev: peak,
        settling_time,
        settled,
        final_separation,
        max_control,
        final_control: max_abs(&traj.control[last]),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerSharingRow {
    pub oscillator: usize,
    pub pm: f64,
    pub control: f64,
    pub pe: f64,
    /// `pm + control - pe`; zero at a true equilibrium.
    pub error: f64,
}

/// Mechanical, control and electrical power at the final sample.
pub fn power_sharing_table(
    traj: &Trajectory,
    sched: &PowerSchedule,
    spec: &NetworkSpec,
    law: &ControlLaw,
) -> Result<Vec<PowerSharingRow>> {
    let (t, state) = traj.times.last().zip(traj.states.last()).ok_or_else(|| Error::invalid("empty trajectory"))?;
    let pm = power_at(*t, sched);
    let u = control_effort(state, law);
    let pe = electrical_power(state.theta(), spec)?;
    Ok((0..spec.n())
        .map(|i| PowerSharingRow {
            oscillator: i + 1,
            pm: pm[i],
            control: u[i],
            pe: pe[i],
            error: pm[i] + u[i] - pe[i],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::SimState;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    #[test]
    fn coi_removes_uniform_shift() {
        let m = [2.0, 3.0, 2.5];
        for c in [-3.0, 0.0, 0.7, 100.0] {
            for v in coi_relative(&[c; 3], &m) {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coi_of_unit_lead() {
        let r = coi_relative(&[1.0, 0.0, 0.0], &[2.0, 3.0, 2.5]);
        assert_abs_diff_eq!(r[0], 0.733333333333, epsilon = 1e-11);
        assert_abs_diff_eq!(r[1], -0.266666666667, epsilon = 1e-11);
        assert_abs_diff_eq!(r[2], -0.266666666667, epsilon = 1e-11);
    }

    #[test]
    fn order_parameter_values() {
        assert_abs_diff_eq!(order_parameter(&[0.4; 5]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(order_parameter(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]), 0.0, epsilon = 1e-12);
        let want = (1.0 + 2.0 * libm::cos(0.1)) / 3.0;
        assert_abs_diff_eq!(order_parameter(&[0.1, 0.0, -0.1]), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.99667, epsilon = 1e-5);
    }

    fn flat_traj(n: usize, samples: usize) -> Trajectory {
        Trajectory {
            times: (0..samples).map(|k| k as f64).collect(),
            states: vec![SimState::zeros(n); samples],
            control: vec![vec![0.0; n]; samples],
            pe: vec![vec![0.0; n]; samples],
            inertia: vec![1.0; n],
        }
    }

    #[test]
    fn quiet_trajectory_metrics() {
        let m = transient_metrics(&flat_traj(3, 5), 1.0, SETTLING_BAND).unwrap();
        assert_eq!(m.peak_freq_dev, 0.0);
        assert_eq!(m.settling_time, 0.0);
        assert!(m.settled);
        assert_eq!(m.final_separation, 0.0);
    }

    #[test]
    fn settling_uses_last_excursion() {
        let mut traj = flat_traj(2, 10);
        traj.states[0].omega_mut()[0] = 1.0; // before t0, not a peak
        traj.states[3].omega_mut()[1] = -0.2;
        traj.states[6].omega_mut()[0] = 0.01;
        let m = transient_metrics(&traj, 2.0, SETTLING_BAND).unwrap();
        assert_eq!(m.peak_freq_dev, 0.2);
        assert_eq!(m.settling_time, 4.0);
        assert!(m.settled);

        traj.states[9].omega_mut()[0] = 0.01;
        let m = transient_metrics(&traj, 2.0, SETTLING_BAND).unwrap();
        assert!(!m.settled);
    }

    #[test]
    fn empty_trajectory_rejected() {
        assert!(transient_metrics(&flat_traj(3, 0), 0.0, SETTLING_BAND).is_err());
    }

    #[test]
    fn zero_power_table_is_zero() {
        let spec = NetworkSpec::all_to_all(vec![1.0; 3], vec![1.0; 3], 2.0).unwrap();
        let sched = PowerSchedule::new(vec![0.0; 3], vec![0.0; 3], 1.0).unwrap();
        let rows = power_sharing_table(&flat_traj(3, 4), &sched, &spec, &ControlLaw::OpenLoop).unwrap();
        assert_eq!(rows.len(), 3);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.oscillator, i + 1);
            assert_eq!((r.pm, r.control, r.pe, r.error), (0.0, 0.0, 0.0, 0.0));
        }
    }
}
