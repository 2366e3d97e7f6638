//! TOML scenario files.
//!
//! ```toml
//! [network]
//! inertia = [2.0, 3.0, 2.5]
//! damping = [3.0, 3.0, 3.0]
//! coupling_gain = 8.0            # all-to-all; or `coupling = [[...], ...]`
//!
//! [control]
//! law = "pi-washout"             # open-loop | pi | pi-washout | droop
//! kp = [8.0, 4.0, 3.0]
//! ki = [4.0, 2.0, 1.0]
//! tau = 1.0                      # pi-washout only
//! # droop_gain = [0.33, 0.33, 0.33]   droop only
//!
//! [disturbance]
//! p_base = [0.6, -0.3, -0.3]
//! t0 = 3.0
//! step_oscillator = 1            # 1-based; the step is mean-removed
//! step_magnitude = 2.0           # or give `p_step = [...]` directly
//!
//! [simulation]                   # optional, defaults shown
//! t_end = 30.0
//! dt = 0.001
//! sample_every = 10
//! ```
//!
//! Unknown keys are rejected. Errors carry the line of the offending key
//! when it can be found.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use swingnet_core::presets::{DEFAULT_DT, DEFAULT_SAMPLE_EVERY, DEFAULT_T_END};
use swingnet_core::{balanced_step, ControlLaw, NetworkSpec, PowerSchedule, Preset, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: NetworkSection,
    pub control: ControlSection,
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub inertia: Vec<f64>,
    pub damping: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ki: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub droop_gain: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub p_base: Vec<f64>,
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_step: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_oscillator: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_magnitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { t_end: DEFAULT_T_END, dt: DEFAULT_DT, sample_every: DEFAULT_SAMPLE_EVERY }
    }
}

/// A config problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: &[(&str, &[&str])] = &[
    ("network", &["inertia", "damping", "coupling_gain", "coupling"]),
    ("control", &["law", "kp", "ki", "tau", "droop_gain"]),
    ("disturbance", &["p_base", "p_step", "t0", "step_oscillator", "step_magnitude"]),
    ("simulation", &["t_end", "dt", "sample_every"]),
];

/// 1-based line of `key` inside `[section]`, or of the section header.
fn locate(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = "";
    let mut header = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == section {
                header = Some(idx + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(key) = key {
            let lhs = line.split('=').next().unwrap_or("").trim();
            if line.contains('=') && lhs == key {
                return Some(idx + 1);
            }
        }
    }
    header
}

/// Anchors a semantic error to the first known key named in its message.
fn anchored(text: Option<&str>, section_hint: &str, message: String) -> ConfigError {
    let mentioned = KEYS
        .iter()
        .flat_map(|(section, keys)| keys.iter().map(move |k| (*section, *k)))
        .filter_map(|(section, key)| message.find(key).map(|pos| (pos, section, key)))
        .min_by_key(|(pos, _, key)| (*pos, usize::MAX - key.len()))
        .map(|(_, section, key)| (section, key));
    let line = text.and_then(|text| match mentioned {
        Some((section, key)) => locate(text, section, Some(key)),
        None => locate(text, section_hint, None),
    });
    ConfigError { line, message }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().trim().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Builds and validates the scenario. `source` is the original text, used
    /// only to report line numbers.
    pub fn to_scenario(&self, source: Option<&str>) -> Result<Scenario, ConfigError> {
        let err = |section: &str, message: String| anchored(source, section, message);

        let net = &self.network;
        let spec = match (&net.coupling_gain, &net.coupling) {
            (Some(k0), None) => NetworkSpec::all_to_all(net.inertia.clone(), net.damping.clone(), *k0),
            (None, Some(k)) => NetworkSpec::new(net.inertia.clone(), net.damping.clone(), k.clone()),
            _ => return Err(err("network", "exactly one of coupling_gain or coupling is required".into())),
        }
        .map_err(|e| err("network", e.to_string()))?;
        let n = spec.n();

        let law = self.control_law(n).map_err(|m| err("control", m))?;
        law.validate(n).map_err(|e| err("control", e.to_string()))?;

        let dist = &self.disturbance;
        let p_step = match (&dist.p_step, dist.step_oscillator, dist.step_magnitude) {
            (Some(p), None, None) => p.clone(),
            (None, Some(osc), Some(mag)) => {
                if osc == 0 || osc > n {
                    return Err(err("disturbance", format!("step_oscillator = {osc} must be between 1 and {n}")));
                }
                balanced_step(osc - 1, mag, n).map_err(|e| err("disturbance", e.to_string()))?
            }
            _ => {
                return Err(err("disturbance", "give either p_step or both step_oscillator and step_magnitude".into()))
            }
        };
        for (name, v) in [("p_base", &dist.p_base), ("p_step", &p_step)] {
            if v.len() != n {
                return Err(err("disturbance", format!("{name} has {} entries, network has {n}", v.len())));
            }
        }
        let sched = PowerSchedule::new(dist.p_base.clone(), p_step.clone(), dist.t0).map_err(|e| {
            let which = if dist.p_base.iter().sum::<f64>().abs() > swingnet_core::netmodel::BALANCE_TOL {
                "p_base"
            } else {
                "p_step"
            };
            err("disturbance", format!("{which}: {e}"))
        })?;

        let sim = &self.simulation;
        let scenario = Scenario { spec, law, sched, t_end: sim.t_end, dt: sim.dt, sample_every: sim.sample_every };
        scenario.validate().map_err(|e| err("simulation", e.to_string()))?;
        Ok(scenario)
    }

    fn control_law(&self, n: usize) -> Result<ControlLaw, String> {
        let c = &self.control;
        let unused = |allowed: &[&str]| -> Result<(), String> {
            let present = [
                ("kp", c.kp.is_some()),
                ("ki", c.ki.is_some()),
                ("tau", c.tau.is_some()),
                ("droop_gain", c.droop_gain.is_some()),
            ];
            match present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
                Some((k, _)) => Err(format!("{k} is not used by law '{}'", c.law)),
                None => Ok(()),
            }
        };
        let need = |name: &str, v: &Option<Vec<f64>>| -> Result<Vec<f64>, String> {
            v.clone().ok_or_else(|| format!("law '{}' requires {name} ({n} values)", c.law))
        };
        match c.law.as_str() {
            "open-loop" => {
                unused(&[])?;
                Ok(ControlLaw::OpenLoop)
            }
            "pi" => {
                unused(&["kp", "ki"])?;
                Ok(ControlLaw::Pi { kp: need("kp", &c.kp)?, ki: need("ki", &c.ki)? })
            }
            "pi-washout" => {
                unused(&["kp", "ki", "tau"])?;
                let tau = c.tau.ok_or_else(|| "law 'pi-washout' requires tau".to_string())?;
                Ok(ControlLaw::PiWashout { kp: need("kp", &c.kp)?, ki: need("ki", &c.ki)?, tau })
            }
            "droop" => {
                unused(&["droop_gain"])?;
                Ok(ControlLaw::Droop { droop_gain: need("droop_gain", &c.droop_gain)? })
            }
            other => Err(format!("unknown law '{other}' (expected open-loop, pi, pi-washout or droop)")),
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let n = s.spec.n();
        let off_diagonal: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s.spec.coupling(i, j))
            .collect();
        let uniform = off_diagonal.first().filter(|k| off_diagonal.iter().all(|v| v == *k)).copied();
        let network = NetworkSection {
            inertia: s.spec.inertia().to_vec(),
            damping: s.spec.damping().to_vec(),
            coupling_gain: uniform.or(if n == 1 { Some(0.0) } else { None }),
            coupling: if uniform.is_none() && n > 1 {
                Some((0..n).map(|i| s.spec.coupling_row(i).to_vec()).collect())
            } else {
                None
            },
        };
        let mut control =
            ControlSection { law: s.law.name().to_string(), kp: None, ki: None, tau: None, droop_gain: None };
        match &s.law {
            ControlLaw::OpenLoop => {}
            ControlLaw::Pi { kp, ki } => {
                control.kp = Some(kp.clone());
                control.ki = Some(ki.clone());
            }
            ControlLaw::PiWashout { kp, ki, tau } => {
                control.kp = Some(kp.clone());
                control.ki = Some(ki.clone());
                control.tau = Some(*tau);
            }
            ControlLaw::Droop { droop_gain } => control.droop_gain = Some(droop_gain.clone()),
        }
        ScenarioConfig {
            network,
            control,
            disturbance: DisturbanceSection {
                p_base: s.sched.p_base().to_vec(),
                t0: s.sched.t0(),
                p_step: Some(s.sched.p_step().to_vec()),
                step_oscillator: None,
                step_magnitude: None,
            },
            simulation: SimulationSection { t_end: s.t_end, dt: s.dt, sample_every: s.sample_every },
        }
    }
}

/// Where a scenario comes from: a TOML file or a built-in preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(std::path::PathBuf),
    Preset(Preset),
}

impl Source {
    /// `preset:NAME` selects a built-in; anything else is a path.
    pub fn parse(arg: &str) -> Result<Self, ConfigError> {
        match arg.strip_prefix("preset:") {
            Some(name) => name
                .parse()
                .map(Source::Preset)
                .map_err(|e: swingnet_core::Error| ConfigError { line: None, message: e.to_string() }),
            None => Ok(Source::File(arg.into())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Preset(p) => format!("preset:{p}"),
        }
    }
}

/// Overrides applied on top of a loaded config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
}

/// Loads, overrides and validates a scenario. Returns the effective config
/// alongside it.
pub fn load(source: &Source, overrides: Overrides) -> Result<(ScenarioConfig, Scenario), ConfigError> {
    let (mut config, text) = match source {
        Source::Preset(p) => (ScenarioConfig::from_scenario(&p.scenario()), None),
        Source::File(path) => {
            let text = read(path)?;
            (ScenarioConfig::parse(&text)?, Some(text))
        }
    };
    if let Some(dt) = overrides.dt {
        config.simulation.dt = dt;
    }
    if let Some(t_end) = overrides.t_end {
        config.simulation.t_end = t_end;
    }
    let scenario = config.to_scenario(text.as_deref())?;
    Ok((config, scenario))
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path)
        .map_err(|e| ConfigError { line: None, message: format!("cannot read {}: {e}", path.display()) })
}
