//! Experiment runner for rough delay equations: configuration, deterministic
//! orchestration and CSV/JSON outputs. The `rdde` binary is a thin wrapper.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{ConfigError, DriverSpec, ExperimentConfig, FieldSpec, FieldSolver};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PROPERTY: i32 = 3;
}
