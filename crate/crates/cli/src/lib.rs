//! Experiment runner for the `monokinetic` library: configuration files and
//! presets, scenario dispatch, reproducible artifacts and parameter sweeps.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, FieldError, Preset, Scenario};
pub use run::{run, sweep, RunError, RunReport, SweepReport};
