//! Planted-instance generators, the experiment runner, bound checks and the
//! acceptance suite.

pub mod acceptance;
pub mod config;
pub mod generate;
pub mod run;

pub use config::{Scenario, ScenarioConfig};
pub use generate::{generate_instance, PlantedInstance};
pub use run::{run_experiment, verify_bounds, Check, RunReport, Verdict};
