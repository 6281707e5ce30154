//! Scenario runner for the dispersive readout simulator: strict TOML
//! configuration, dispatch to the model crate, and byte-stable CSV/JSON
//! output.

pub mod bundle;
pub mod config;
pub mod scenarios;

use thiserror::Error;

pub use bundle::{BundleError, ResultBundle, Table};
pub use config::{preset, ConfigError, Format, LoadedConfig, Scenario, ScenarioConfig};
pub use scenarios::run_scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("scenario `{scenario}`: {source}")]
    Model { scenario: &'static str, source: readout_core::Error },

    #[error("output error: {0}")]
    Output(#[from] BundleError),
}

impl CliError {
    /// 1 for configuration problems, 2 for runtime or physics failures,
    /// 3 for file I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Read { .. }) => 3,
            CliError::Config(_) => 1,
            CliError::Model { source: readout_core::Error::Configuration(_), .. } => 1,
            CliError::Model { .. } => 2,
            CliError::Output(BundleError::Io { .. }) => 3,
            CliError::Output(_) => 2,
        }
    }
}

/// Runs `loaded` and records its defaulted keys in the bundle metadata.
pub fn run(loaded: &LoadedConfig) -> Result<ResultBundle, CliError> {
    let cfg = &loaded.config;
    let mut bundle =
        run_scenario(cfg).map_err(|source| CliError::Model { scenario: cfg.scenario.name(), source })?;
    bundle.metadata.insert("defaulted_keys".into(), serde_json::json!(loaded.defaulted));
    Ok(bundle)
}
