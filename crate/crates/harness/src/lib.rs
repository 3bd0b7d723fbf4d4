//! Configuration, orchestration and report emission for gap experiments.

pub mod config;
pub mod emit;
pub mod oracle;
pub mod report;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, Kind};
pub use emit::{emit, write_index, Format};
pub use report::VerificationReport;
pub use run::{run, RunError};
