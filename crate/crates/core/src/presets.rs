//! The three-oscillator reference configuration and its control variants.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::netmodel::{balanced_step, ControlLaw, NetworkSpec, PowerSchedule};
use crate::simulate::Scenario;

pub const INERTIA: [f64; 3] = [2.0, 3.0, 2.5];
pub const DAMPING: [f64; 3] = [3.0, 3.0, 3.0];
pub const COUPLING_GAIN: f64 = 8.0;
pub const KP: [f64; 3] = [8.0, 4.0, 3.0];
pub const KI: [f64; 3] = [4.0, 2.0, 1.0];
pub const WASHOUT_TAU: f64 = 1.0;
pub const P_BASE: [f64; 3] = [0.6, -0.3, -0.3];
pub const STEP_MAGNITUDE: f64 = 2.0;
/// The step lands on the first oscillator.
pub const STEP_NODE: usize = 0;
pub const STEP_TIME: f64 = 3.0;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 30.0;
pub const DEFAULT_SAMPLE_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Natural,
    Pi,
    PiWashout,
    Droop,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Natural, Preset::Pi, Preset::PiWashout, Preset::Droop];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Natural => "natural",
            Preset::Pi => "pi",
            Preset::PiWashout => "pi-washout",
            Preset::Droop => "droop",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Natural => "open-loop swing network, synchronization through coupling only",
            Preset::Pi => "reference-tracking PI on frequency deviation",
            Preset::PiWashout => "reference-tracking PI with washout on the integrator",
            Preset::Droop => "first-order droop with m_p = 1/D",
        }
    }

    pub fn law(self) -> ControlLaw {
        match self {
            Preset::Natural => ControlLaw::OpenLoop,
            Preset::Pi => ControlLaw::Pi { kp: KP.to_vec(), ki: KI.to_vec() },
            Preset::PiWashout => ControlLaw::PiWashout { kp: KP.to_vec(), ki: KI.to_vec(), tau: WASHOUT_TAU },
            Preset::Droop => ControlLaw::Droop { droop_gain: DAMPING.iter().map(|d| 1.0 / d).collect() },
        }
    }

    pub fn scenario(self) -> Scenario {
        let n = INERTIA.len();
        let spec = NetworkSpec::all_to_all(INERTIA.to_vec(), DAMPING.to_vec(), COUPLING_GAIN)
            .expect("reference network is valid");
        let step: Vec<f64> = balanced_step(STEP_NODE, STEP_MAGNITUDE, n).expect("step node in range");
        let sched = PowerSchedule::new(P_BASE.to_vec(), step, STEP_TIME).expect("reference powers are balanced");
        Scenario {
            spec,
            law: self.law(),
            sched,
            t_end: DEFAULT_T_END,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::invalid(alloc::format!("unknown preset '{s}' (known: {})", known.join(", ")))
        })
    }
}

/// Reference scenario by name: `natural`, `pi`, `pi-washout` or `droop`.
pub fn table1_scenario(name: &str) -> Result<Scenario> {
    Ok(name.parse::<Preset>()?.scenario())
}
