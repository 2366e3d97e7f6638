//! Network data model and the right-hand side of the coupled swing dynamics.
//!
//! All quantities are per-unit in a frame rotating at the reference
//! frequency, so `omega` is a frequency deviation and an angle of zero means
//! "in phase with the reference". Voltage magnitudes are folded into the
//! coupling matrix and the network is lossless.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on the sum of a power vector for it to count as balanced.
pub const BALANCE_TOL: f64 = 1e-12;

/// Inertia, damping and coupling of an `n`-oscillator network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    inertia: Vec<f64>,
    damping: Vec<f64>,
    /// Row-major `n x n`.
    coupling: Vec<f64>,
}

impl NetworkSpec {
    /// Builds a network from an explicit coupling matrix.
    ///
    /// The matrix must be square, symmetric, non-negative and have a zero
    /// diagonal; inertia and damping must be strictly positive.
    pub fn new(inertia: Vec<f64>, damping: Vec<f64>, coupling: Vec<Vec<f64>>) -> Result<Self> {
        let n = inertia.len();
        if n == 0 {
            return Err(Error::invalid("network needs at least one oscillator"));
        }
        if damping.len() != n {
            return Err(Error::invalid(alloc::format!("damping has {} entries, expected {n}", damping.len())));
        }
        if coupling.len() != n || coupling.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(alloc::format!("coupling must be {n}x{n}")));
        }
        for (i, (&m, &d)) in inertia.iter().zip(&damping).enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid(alloc::format!("inertia[{i}] = {m} must be positive")));
            }
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(alloc::format!("damping[{i}] = {d} must be positive")));
            }
        }
        for i in 0..n {
            if coupling[i][i] != 0.0 {
                return Err(Error::invalid(alloc::format!("coupling[{i}][{i}] must be zero")));
            }
            for j in 0..n {
                let k = coupling[i][j];
                if !(k.is_finite() && k >= 0.0) {
                    return Err(Error::invalid(alloc::format!("coupling[{i}][{j}] = {k} must be non-negative")));
                }
                if k != coupling[j][i] {
                    return Err(Error::invalid(alloc::format!("coupling is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(NetworkSpec { inertia, damping, coupling: coupling.into_iter().flatten().collect() })
    }

    /// All-to-all network with uniform gain `k0` off the diagonal.
    pub fn all_to_all(inertia: Vec<f64>, damping: Vec<f64>, k0: f64) -> Result<Self> {
        let n = inertia.len();
        let coupling = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { k0 }).collect()).collect();
        Self::new(inertia, damping, coupling)
    }

    pub fn n(&self) -> usize {
        self.inertia.len()
    }

    pub fn inertia(&self) -> &[f64] {
        &self.inertia
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n() + j]
    }

    pub fn coupling_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.coupling[i * n..(i + 1) * n]
    }

    /// Total coupling attached to node `i`, the most power it can export.
    pub fn capacity(&self, i: usize) -> f64 {
        self.coupling_row(i).iter().sum()
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len == self.n() {
            Ok(())
        } else {
            Err(Error::invalid(alloc::format!("{what} has length {len}, network has {} oscillators", self.n())))
        }
    }
}

/// Node-level frequency law.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlLaw {
    /// Plain swing dynamics; synchronization comes from the network alone.
    OpenLoop,
    /// Reference-tracking PI on the frequency deviation, `z' = omega`.
    Pi { kp: Vec<f64>, ki: Vec<f64> },
    /// PI with a washout on the integrator, `z' = omega - z / tau`.
    PiWashout { kp: Vec<f64>, ki: Vec<f64>, tau: f64 },
    /// First-order droop, `theta' = -m_p (P_e - P)`.
    Droop { droop_gain: Vec<f64> },
}

impl ControlLaw {
    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::OpenLoop => "open-loop",
            ControlLaw::Pi { .. } => "pi",
            ControlLaw::PiWashout { .. } => "pi-washout",
            ControlLaw::Droop { .. } => "droop",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let gains = |name: &str, v: &[f64], strict: bool| -> Result<()> {
            if v.len() != n {
                return Err(Error::invalid(alloc::format!("{name} has length {}, expected {n}", v.len())));
            }
            for (i, &g) in v.iter().enumerate() {
                let ok = g.is_finite() && if strict { g > 0.0 } else { g >= 0.0 };
                if !ok {
                    let rel = if strict { "positive" } else { "non-negative" };
                    return Err(Error::invalid(alloc::format!("{name}[{i}] = {g} must be {rel}")));
                }
            }
            Ok(())
        };
        match self {
            ControlLaw::OpenLoop => Ok(()),
            ControlLaw::Pi { kp, ki } => {
                gains("kp", kp, false)?;
                gains("ki", ki, false)
            }
            ControlLaw::PiWashout { kp, ki, tau } => {
                gains("kp", kp, false)?;
                gains("ki", ki, false)?;
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::invalid(alloc::format!("tau = {tau} must be positive")));
                }
                Ok(())
            }
            ControlLaw::Droop { droop_gain } => gains("droop_gain", droop_gain, true),
        }
    }

    fn pi_gains(&self) -> Option<(&[f64], &[f64])> {
        match self {
            ControlLaw::Pi { kp, ki } | ControlLaw::PiWashout { kp, ki, .. } => Some((kp, ki)),
            _ => None,
        }
    }
}

/// Flat state `[theta | omega | z]`, each block of length `n`.
///
/// `z` holds the PI integrator (or washout) state and stays at zero for the
/// open-loop and droop laws. Under droop `omega` carries the algebraic
/// frequency rather than an integrated state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    n: usize,
    data: Vec<f64>,
}

impl SimState {
    pub fn zeros(n: usize) -> Self {
        SimState { n, data: vec![0.0; 3 * n] }
    }

    pub fn from_parts(theta: &[f64], omega: &[f64], z: &[f64]) -> Result<Self> {
        let n = theta.len();
        if omega.len() != n || z.len() != n {
            return Err(Error::invalid("theta, omega and z must have equal length"));
        }
        let mut data = Vec::with_capacity(3 * n);
        data.extend_from_slice(theta);
        data.extend_from_slice(omega);
        data.extend_from_slice(z);
        Ok(SimState { n, data })
    }

    pub fn from_flat(data: Vec<f64>) -> Result<Self> {
        if !data.len().is_multiple_of(3) {
            return Err(Error::invalid("flat state length must be a multiple of 3"));
        }
        Ok(SimState { n: data.len() / 3, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> &[f64] {
        &self.data[..self.n]
    }

    pub fn omega(&self) -> &[f64] {
        &self.data[self.n..2 * self.n]
    }

    pub fn z(&self) -> &[f64] {
        &self.data[2 * self.n..]
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.n]
    }

    pub fn omega_mut(&mut self) -> &mut [f64] {
        let n = self.n;
        &mut self.data[n..2 * n]
    }

    pub fn z_mut(&mut self) -> &mut [f64] {
        let n = self.n;
        &mut self.data[2 * n..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.data)
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Mechanical power schedule `P(t) = p_base + 1[t >= t0] p_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    p_base: Vec<f64>,
    p_step: Vec<f64>,
    t0: f64,
}

impl PowerSchedule {
    /// Both vectors must sum to zero within [`BALANCE_TOL`].
    pub fn new(p_base: Vec<f64>, p_step: Vec<f64>, t0: f64) -> Result<Self> {
        if p_base.len() != p_step.len() {
            return Err(Error::invalid("p_base and p_step lengths differ"));
        }
        if !(t0.is_finite() && t0 >= 0.0) {
            return Err(Error::invalid(alloc::format!("step time t0 = {t0} must be non-negative")));
        }
        check_finite(&p_base)?;
        check_finite(&p_step)?;
        for v in [&p_base, &p_step] {
            let imbalance: f64 = v.iter().sum();
            if imbalance.abs() > BALANCE_TOL {
                return Err(Error::Infeasible { imbalance });
            }
        }
        Ok(PowerSchedule { p_base, p_step, t0 })
    }

    pub fn p_base(&self) -> &[f64] {
        &self.p_base
    }

    pub fn p_step(&self) -> &[f64] {
        &self.p_step
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n(&self) -> usize {
        self.p_base.len()
    }

    /// Power after the step, `p_base + p_step`.
    pub fn p_after(&self) -> Vec<f64> {
        self.p_base.iter().zip(&self.p_step).map(|(b, s)| b + s).collect()
    }
}

/// Mechanical power at time `t`. The step is already applied at `t == t0`.
pub fn power_at(t: f64, sched: &PowerSchedule) -> Vec<f64> {
    if t >= sched.t0 {
        sched.p_after()
    } else {
        sched.p_base.clone()
    }
}

/// Step of size `magnitude` on `node` with its mean removed, so the vector
/// sums to zero and only relative modes are excited.
pub fn balanced_step(node: usize, magnitude: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("balanced step needs at least two oscillators"));
    }
    if node >= n {
        return Err(Error::invalid(alloc::format!("step node {node} out of range for {n} oscillators")));
    }
    let mean = magnitude / n as f64;
    Ok((0..n).map(|i| if i == node { magnitude - mean } else { -mean }).collect())
}

/// Electrical power injections `P_e,i = sum_j K_ij sin(theta_i - theta_j)`.
pub fn electrical_power(theta: &[f64], spec: &NetworkSpec) -> Result<Vec<f64>> {
    spec.check_len("theta", theta.len())?;
    let mut out = vec![0.0; spec.n()];
    electrical_power_into(theta, spec, &mut out);
    Ok(out)
}

pub(crate) fn electrical_power_into(theta: &[f64], spec: &NetworkSpec, out: &mut [f64]) {
    let n = spec.n();
    for i in 0..n {
        let row = spec.coupling_row(i);
        let mut acc = 0.0;
        for j in 0..n {
            if row[j] != 0.0 {
                acc += row[j] * libm::sin(theta[i] - theta[j]);
            }
        }
        out[i] = acc;
    }
}

/// Control input `u_i = -kp_i omega_i - ki_i z_i`; zero for laws without a PI loop.
pub fn control_effort(state: &SimState, law: &ControlLaw) -> Vec<f64> {
    let mut u = vec![0.0; state.n()];
    control_effort_into(state.omega(), state.z(), law, &mut u);
    u
}

fn control_effort_into(omega: &[f64], z: &[f64], law: &ControlLaw, out: &mut [f64]) {
    match law.pi_gains() {
        Some((kp, ki)) => {
            for i in 0..out.len() {
                out[i] = -kp[i] * omega[i] - ki[i] * z[i];
            }
        }
        None => out.fill(0.0),
    }
}

/// Time derivative of `state` under schedule `sched` at time `t`.
pub fn rhs(t: f64, state: &SimState, spec: &NetworkSpec, law: &ControlLaw, sched: &PowerSchedule) -> Result<SimState> {
    spec.check_len("state", state.n())?;
    spec.check_len("power schedule", sched.n())?;
    let power = power_at(t, sched);
    let mut out = SimState::zeros(state.n());
    derivative(state.as_slice(), spec, law, &power, out.as_mut_slice())?;
    Ok(out)
}

/// Derivative of a flat `[theta | omega | z]` state for a fixed power vector.
///
/// Lengths are assumed consistent with `spec`.
pub(crate) fn derivative(
    state: &[f64],
    spec: &NetworkSpec,
    law: &ControlLaw,
    power: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_finite(state)?;
    let n = spec.n();
    let (theta, rest) = state.split_at(n);
    let (omega, z) = rest.split_at(n);
    let (d_theta, rest) = out.split_at_mut(n);
    let (d_omega, d_z) = rest.split_at_mut(n);

    // P_e goes into d_omega first and is overwritten in place below.
    electrical_power_into(theta, spec, d_omega);

    match law {
        ControlLaw::Droop { droop_gain } => {
            for i in 0..n {
                d_theta[i] = -droop_gain[i] * (d_omega[i] - power[i]);
            }
            d_omega.fill(0.0);
            d_z.fill(0.0);
        }
        _ => {
            d_theta.copy_from_slice(omega);
            let m = spec.inertia();
            let d = spec.damping();
            match law.pi_gains() {
                Some((kp, ki)) => {
                    for i in 0..n {
                        let u = -kp[i] * omega[i] - ki[i] * z[i];
                        d_omega[i] = (power[i] - d_omega[i] - d[i] * omega[i] + u) / m[i];
                    }
                }
                None => {
                    for i in 0..n {
                        d_omega[i] = (power[i] - d_omega[i] - d[i] * omega[i]) / m[i];
                    }
                }
            }
            match law {
                ControlLaw::Pi { .. } => d_z.copy_from_slice(omega),
                ControlLaw::PiWashout { tau, .. } => {
                    for i in 0..n {
                        d_z[i] = omega[i] - z[i] / tau;
                    }
                }
                _ => d_z.fill(0.0),
            }
        }
    }
    Ok(())
}

/// Algebraic droop frequency `-m_p (P_e - P)` for each node.
pub(crate) fn droop_frequency(theta: &[f64], spec: &NetworkSpec, droop_gain: &[f64], power: &[f64], out: &mut [f64]) {
    electrical_power_into(theta, spec, out);
    for i in 0..out.len() {
        out[i] = -droop_gain[i] * (out[i] - power[i]);
    }
}

/// Lyapunov function of the open-loop network under constant power `p`:
/// kinetic energy minus injected work plus stored coupling energy.
///
/// Non-increasing along open-loop trajectories; its rate is `-sum D_i omega_i^2`.
pub fn energy(theta: &[f64], omega: &[f64], p: &[f64], spec: &NetworkSpec) -> f64 {
    let n = spec.n();
    let m = spec.inertia();
    let mut v = 0.0;
    for i in 0..n {
        v += 0.5 * m[i] * omega[i] * omega[i] - p[i] * theta[i];
        for j in (i + 1)..n {
            v += spec.coupling(i, j) * (1.0 - libm::cos(theta[i] - theta[j]));
        }
    }
    v
}
