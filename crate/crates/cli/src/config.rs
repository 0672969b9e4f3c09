//! Scenario files: a single scenario object or an array of them.

use std::collections::BTreeSet;
use std::path::Path;

use fastsim_core::ScenarioConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    Many(Vec<ScenarioConfig>),
    One(Box<ScenarioConfig>),
}

fn invalid(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_owned(), message: message.into() }
}

/// Parses a scenario file. Missing files, syntax errors and unknown keys
/// are all configuration errors.
pub fn parse_scenarios(path: &Path, text: &str) -> Result<Vec<ScenarioConfig>, CliError> {
    // untagged enums hide the underlying message, so retry to report it
    let scenarios = match serde_json::from_str::<ScenarioFile>(text) {
        Ok(ScenarioFile::Many(v)) => v,
        Ok(ScenarioFile::One(c)) => vec![*c],
        Err(_) => {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| invalid(path, format!("  not valid JSON: {e}")))?;
            let err = if value.is_array() {
                serde_json::from_value::<Vec<ScenarioConfig>>(value).err()
            } else {
                serde_json::from_value::<ScenarioConfig>(value).err()
            };
            return Err(invalid(path, format!("  {}", err.map_or_else(|| "unrecognised layout".into(), |e| e.to_string()))));
        }
    };
    if scenarios.is_empty() {
        return Err(invalid(path, "  the file lists no scenarios"));
    }
    Ok(scenarios)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<ScenarioConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(path, format!("  cannot read file: {e}")))?;
    parse_scenarios(path, &text)
}

/// Validates every scenario, collecting all field issues, and rejects
/// duplicate scenario ids.
pub fn validate_all(path: &Path, scenarios: &[ScenarioConfig]) -> Result<(), CliError> {
    let mut lines = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, s) in scenarios.iter().enumerate() {
        if !seen.insert(s.scenario_id) {
            lines.push(format!("  scenario[{i}].scenario_id: duplicate id {}", s.scenario_id));
        }
        if let Err(errors) = s.validate() {
            lines.extend(errors.0.iter().map(|issue| format!("  scenario[{i}].{issue}")));
        }
    }
    if lines.is_empty() {
        Ok(())
    } else {
        Err(invalid(path, lines.join("\n")))
    }
}

/// SHA-256 of the effective scenarios in canonical form. Keys come out in
/// a fixed order whatever their order in the input file.
pub fn config_hash(scenarios: &[ScenarioConfig]) -> String {
    // Value maps are sorted by key, which gives the canonical ordering
    let canonical = serde_json::to_value(scenarios).expect("scenario configs serialize");
    let bytes = serde_json::to_vec(&canonical).expect("JSON values serialize");
    hex::encode(Sha256::digest(bytes))
}
