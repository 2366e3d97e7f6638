//! Second-order Kuramoto (swing-network) oscillator networks.
//!
//! Models a lossless network of grid-forming inverters whose angles obey
//! inertial swing dynamics in a rotating frame, and compares plain network
//! synchronization with units that track a broadcast frequency reference
//! through a PI loop (optionally with a washout on the integrator).
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! everything else that touches the OS live in the `swingnet` crate.

#![no_std]

extern crate alloc;

mod error;
mod linalg;

pub mod equilibrium;
pub mod metrics;
pub mod netmodel;
pub mod presets;
pub mod simulate;

pub use equilibrium::{jacobian, reduced_min_eigenvalue, solve_equilibrium, EquilibriumOptions, EquilibriumResult};
pub use error::{Error, Result};
pub use metrics::{
    coi_relative, order_parameter, power_sharing_table, transient_metrics, PowerSharingRow, TransientMetrics,
};
pub use netmodel::{
    balanced_step, control_effort, electrical_power, energy, power_at, rhs, ControlLaw, NetworkSpec, PowerSchedule,
    SimState,
};
pub use presets::{table1_scenario, Preset};
pub use simulate::{rk4_step, run, Rk4, Scenario, Trajectory};
