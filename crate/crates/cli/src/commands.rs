use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use swingnet_core::equilibrium::reduced_min_eigenvalue;
use swingnet_core::metrics::{max_separation, SETTLING_BAND};
use swingnet_core::{
    coi_relative, order_parameter, power_sharing_table, run, solve_equilibrium, transient_metrics, EquilibriumOptions,
    NetworkSpec, Preset, Scenario,
};

use crate::config::{load, ConfigError, Overrides, ScenarioConfig, Source};
use crate::output::{write_csv, Artifacts, ComparedRun, ComparisonReport, EquilibriumDiagnostics, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(swingnet_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<swingnet_core::Error> for CliError {
    fn from(e: swingnet_core::Error) -> Self {
        use swingnet_core::Error as E;
        match e {
            E::InvalidInput(_) | E::Infeasible { .. } => {
                CliError::Config(ConfigError { line: None, message: e.to_string() })
            }
            E::NoConvergence { .. } | E::NonFinite { .. } | E::Divergence { .. } => CliError::Numerical(e),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn diagnostics(
    theta: Vec<f64>,
    iterations: usize,
    residual_norm: f64,
    spec: &NetworkSpec,
) -> Result<EquilibriumDiagnostics, CliError> {
    let min_eigenvalue = reduced_min_eigenvalue(&theta, spec, spec.n() - 1)?;
    Ok(EquilibriumDiagnostics { theta, iterations, residual_norm, min_eigenvalue })
}

fn execute(source: &str, config: ScenarioConfig, scenario: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let (traj, eq) = run(scenario)?;
    let metrics = transient_metrics(&traj, scenario.sched.t0(), SETTLING_BAND)?;
    let power_sharing = power_sharing_table(&traj, &scenario.sched, &scenario.spec, &scenario.law)?;
    let last = traj.final_state().expect("trajectory has samples");
    let final_order_parameter = order_parameter(&coi_relative(last.theta(), scenario.spec.inertia()));

    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let csv_path = out_dir.join("trajectory.csv");
    let report_path = out_dir.join("report.json");
    let file = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    write_csv(&traj, file).map_err(|e| io_err(&csv_path, e))?;

    let report = RunReport {
        source: source.to_string(),
        scenario: config,
        settling_band: SETTLING_BAND,
        metrics,
        final_order_parameter,
        power_sharing,
        equilibrium: diagnostics(eq.theta, eq.iterations, eq.residual_norm, &scenario.spec)?,
        artifacts: Artifacts { trajectory_csv: csv_path, report_json: report_path.clone() },
    };
    write_json(&report_path, &report)?;
    Ok(report)
}

/// Simulates one scenario and writes `trajectory.csv` and `report.json`.
pub fn cmd_run(source: &Source, overrides: Overrides, output_dir: &Path) -> Result<RunReport, CliError> {
    let (config, scenario) = load(source, overrides)?;
    execute(&source.label(), config, &scenario, output_dir)
}

/// Runs two scenarios on the same physics side by side.
///
/// Outputs go to `a/` and `b/` under `output_dir`, plus `comparison.json`.
pub fn cmd_compare(
    a: &Source,
    b: &Source,
    overrides: Overrides,
    output_dir: &Path,
) -> Result<ComparisonReport, CliError> {
    let (config_a, scen_a) = load(a, overrides)?;
    let (config_b, scen_b) = load(b, overrides)?;
    if scen_a.spec != scen_b.spec {
        return Err(ConfigError { line: None, message: "the two configs describe different networks".into() }.into());
    }
    if scen_a.sched != scen_b.sched {
        return Err(ConfigError { line: None, message: "the two configs use different power schedules".into() }.into());
    }

    let (label_a, label_b) = (a.label(), b.label());
    let (dir_a, dir_b) = (output_dir.join("a"), output_dir.join("b"));
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| execute(&label_a, config_a, &scen_a, &dir_a));
        let hb = s.spawn(|| execute(&label_b, config_b, &scen_b, &dir_b));
        (ha.join().expect("run a panicked"), hb.join().expect("run b panicked"))
    });
    let (ra, rb) = (ra?, rb?);

    let equilibrium_mismatch =
        ra.equilibrium.theta.iter().zip(&rb.equilibrium.theta).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (ma, mb) = (&ra.metrics, &rb.metrics);
    let overshoot_ratio = if ma.peak_freq_dev == mb.peak_freq_dev { 1.0 } else { mb.peak_freq_dev / ma.peak_freq_dev };
    let report = ComparisonReport {
        delta_peak_freq_dev: mb.peak_freq_dev - ma.peak_freq_dev,
        delta_settling_time: mb.settling_time - ma.settling_time,
        delta_final_separation: mb.final_separation - ma.final_separation,
        overshoot_ratio,
        equilibrium_mismatch,
        a: ComparedRun {
            source: ra.source,
            law: scen_a.law.name().into(),
            metrics: ra.metrics,
            report_json: ra.artifacts.report_json,
        },
        b: ComparedRun {
            source: rb.source,
            law: scen_b.law.name().into(),
            metrics: rb.metrics,
            report_json: rb.artifacts.report_json,
        },
    };
    fs::create_dir_all(output_dir).map_err(|e| io_err(output_dir, e))?;
    write_json(&output_dir.join("comparison.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub label: &'static str,
    pub power: Vec<f64>,
    pub diagnostics: EquilibriumDiagnostics,
    /// Max pairwise angle spread, rad.
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub source: String,
    pub points: Vec<EquilibriumPoint>,
}

impl EquilibriumReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "equilibrium for {}", self.source);
        for p in &self.points {
            let d = &p.diagnostics;
            let _ = writeln!(s, "[{}]", p.label);
            let _ = writeln!(s, "  power          = {:?}", p.power);
            let _ = writeln!(s, "  theta (COI)    = {:?}", d.theta);
            let _ = writeln!(s, "  separation     = {:.10} rad", p.separation);
            let _ = writeln!(s, "  residual       = {:e}", d.residual_norm);
            let _ = writeln!(s, "  iterations     = {}", d.iterations);
            let _ = writeln!(s, "  min eigenvalue = {:.6}", d.min_eigenvalue);
        }
        s
    }
}

/// Solves the power balance before and after the step.
pub fn cmd_equilibrium(source: &Source) -> Result<EquilibriumReport, CliError> {
    let (_, scenario) = load(source, Overrides::default())?;
    let spec = &scenario.spec;
    let mut points = Vec::new();
    for (label, power) in [("baseline", scenario.sched.p_base().to_vec()), ("after step", scenario.sched.p_after())] {
        let eq = solve_equilibrium(&power, spec, &EquilibriumOptions::default())?;
        let separation = max_separation(&eq.theta);
        points.push(EquilibriumPoint {
            label,
            power,
            diagnostics: diagnostics(eq.theta, eq.iterations, eq.residual_norm, spec)?,
            separation,
        });
    }
    Ok(EquilibriumReport { source: source.label(), points })
}

/// Lists the built-in presets; with `write_dir`, also writes each as TOML.
pub fn cmd_presets(write_dir: Option<&Path>) -> Result<Vec<(Preset, Option<PathBuf>)>, CliError> {
    let mut out = Vec::new();
    for p in Preset::ALL {
        let path = match write_dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                let path = dir.join(format!("{}.toml", p.name()));
                let text = ScenarioConfig::from_scenario(&p.scenario()).to_toml();
                fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                Some(path)
            }
            None => None,
        };
        out.push((p, path));
    }
    Ok(out)
}
