//! Configuration parsing, experiment orchestration and artifact output.

pub mod config;
pub mod run;
pub mod snapshot;

pub use config::{parse_config, parse_with_overrides, ConfigError, Problem, RunConfig};
pub use run::{run, RunError, RunOutcome};
pub use snapshot::FieldSnapshot;
