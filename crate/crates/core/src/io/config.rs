use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use super::IoError;
use crate::experiments::{ScenarioConfig, ValidationError};

const REQUIRED: [&str; 7] = [
    "name",
    "scenario",
    "environment",
    "agent",
    "emotion",
    "schedule",
    "seeds",
];
const OPTIONAL: [&str; 3] = ["notes", "output_dir", "sweep"];

/// Read and validate a scenario config, reporting every problem found.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, IoError> {
    let value: Value = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(IoError::Validation(vec![ValidationError::new(
            "",
            "config must be a JSON object",
        )]));
    };
    let mut errors = Vec::new();
    for key in obj.keys() {
        if !REQUIRED.contains(&key.as_str()) && !OPTIONAL.contains(&key.as_str()) {
            errors.push(ValidationError::new(key.as_str(), "unknown field"));
        }
    }
    let name = section::<String>(&obj, "name", &mut errors);
    let scenario = section(&obj, "scenario", &mut errors);
    let environment = section(&obj, "environment", &mut errors);
    let agent = section(&obj, "agent", &mut errors);
    let emotion = section(&obj, "emotion", &mut errors);
    let schedule = section(&obj, "schedule", &mut errors);
    let seeds = section(&obj, "seeds", &mut errors);
    let notes = optional_section(&obj, "notes", &mut errors);
    let output_dir = optional_section(&obj, "output_dir", &mut errors);
    let sweep = optional_section(&obj, "sweep", &mut errors);
    let (
        Some(name),
        Some(scenario),
        Some(environment),
        Some(agent),
        Some(emotion),
        Some(schedule),
        Some(seeds),
        Some(notes),
        Some(output_dir),
        Some(sweep),
    ) = (
        name,
        scenario,
        environment,
        agent,
        emotion,
        schedule,
        seeds,
        notes,
        output_dir,
        sweep,
    )
    else {
        return Err(IoError::Validation(errors));
    };
    let cfg = ScenarioConfig {
        name,
        scenario,
        notes,
        environment,
        agent,
        emotion,
        schedule,
        seeds,
        output_dir,
        sweep: sweep.unwrap_or_default(),
    };
    errors.extend(cfg.validate());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(IoError::Validation(errors))
    }
}

fn section<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, errors: &mut Vec<ValidationError>) -> Option<T> {
    match obj.get(key) {
        None => {
            errors.push(ValidationError::new(key, "required"));
            None
        }
        Some(v) => match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                errors.push(ValidationError::new(key, e.to_string()));
                None
            }
        },
    }
}

/// `Some(None)` when absent, `None` when present but malformed.
fn optional_section<T: DeserializeOwned>(
    obj: &Map<String, Value>,
    key: &str,
    errors: &mut Vec<ValidationError>,
) -> Option<Option<T>> {
    match obj.get(key) {
        None => Some(None),
        Some(_) => section(obj, key, errors).map(Some),
    }
}

pub fn config_bytes(cfg: &ScenarioConfig) -> Result<Vec<u8>, IoError> {
    let mut bytes = serde_json::to_vec_pretty(cfg)?;
    bytes.push(b'\n');
    Ok(bytes)
}
