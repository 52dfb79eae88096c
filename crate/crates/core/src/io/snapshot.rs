use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IoError;
use crate::experiments::{AgentState, ScenarioConfig};

pub const FORMAT_VERSION: u32 = 1;

/// Agent state plus the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    pub run_id: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub agent: AgentState,
}

impl Snapshot {
    pub fn new(run_id: &str, seed: u64, config: ScenarioConfig, agent: AgentState) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            run_id: run_id.to_string(),
            seed,
            config,
            agent,
        }
    }
}

/// Canonical bytes: struct fields in declaration order, map keys sorted,
/// floats as shortest round-trip decimals.
pub fn snapshot_bytes(snapshot: &Snapshot) -> Result<Vec<u8>, IoError> {
    let mut bytes = serde_json::to_vec_pretty(snapshot)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn save_snapshot(snapshot: &Snapshot, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, snapshot_bytes(snapshot)?).map_err(|e| IoError::at(path, e))
}

pub fn parse_snapshot(text: &str) -> Result<Snapshot, IoError> {
    let value: Value = serde_json::from_str(text)?;
    let found = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::SchemaMismatch("snapshot has no integer format_version".into()))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(IoError::VersionMismatch {
            found,
            supported: FORMAT_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    parse_snapshot(&text)
}
