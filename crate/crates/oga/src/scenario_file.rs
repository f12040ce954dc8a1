//! Scenario files: TOML whose top-level keys are exactly the scenario fields.

use std::path::{Path, PathBuf};

use oga_core::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
}

/// Parses scenario text. `origin` only labels error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioFileError> {
    toml::from_str(text).map_err(|e| ScenarioFileError::Parse {
        origin: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })
}

pub fn read_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn scenario_to_string(s: &Scenario) -> String {
    toml::to_string(s).expect("scenario fields are all representable in TOML")
}
