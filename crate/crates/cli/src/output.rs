//! CSV trajectories and JSON reports.

use std::io::{self, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use swingnet_core::{coi_relative, order_parameter, PowerSharingRow, Trajectory, TransientMetrics};

use crate::config::ScenarioConfig;

/// `t,theta_1..n,omega_1..n,z_1..n,u_1..n,pe_1..n,theta_rel_1..n,r`
pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for prefix in ["theta", "omega", "z", "u", "pe", "theta_rel"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.push("r".to_string());
    cols.join(",")
}

/// Twelve significant digits in scientific notation.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn write_csv<W: Write>(traj: &Trajectory, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    let n = traj.inertia.len();
    writeln!(out, "{}", csv_header(n))?;
    let mut line = String::new();
    for k in 0..traj.len() {
        let state = &traj.states[k];
        let rel = coi_relative(state.theta(), &traj.inertia);
        line.clear();
        line.push_str(&num(traj.times[k]));
        let blocks: [&[f64]; 6] = [state.theta(), state.omega(), state.z(), &traj.control[k], &traj.pe[k], &rel];
        for v in blocks.iter().flat_map(|b| b.iter()) {
            line.push(',');
            line.push_str(&num(*v));
        }
        line.push(',');
        line.push_str(&num(order_parameter(&rel)));
        writeln!(out, "{line}")?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDiagnostics {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Smallest eigenvalue of the reduced power-flow Jacobian.
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub trajectory_csv: PathBuf,
    pub report_json: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub source: String,
    pub scenario: ScenarioConfig,
    pub settling_band: f64,
    pub metrics: TransientMetrics,
    pub final_order_parameter: f64,
    pub power_sharing: Vec<PowerSharingRow>,
    pub equilibrium: EquilibriumDiagnostics,
    pub artifacts: Artifacts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparedRun {
    pub source: String,
    pub law: String,
    pub metrics: TransientMetrics,
    pub report_json: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: ComparedRun,
    pub b: ComparedRun,
    /// `peak(b) / peak(a)`; below 1 when `b` overshoots less.
    pub overshoot_ratio: f64,
    pub delta_peak_freq_dev: f64,
    pub delta_settling_time: f64,
    pub delta_final_separation: f64,
    /// Largest difference between the two starting equilibria.
    pub equilibrium_mismatch: f64,
}
