//! File formats and commands around `swingnet-core`.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_compare, cmd_equilibrium, cmd_presets, cmd_run, CliError};
pub use config::{load, ConfigError, Overrides, ScenarioConfig, Source};
