use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Record of one command invocation, sufficient to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    /// Input name to content fingerprint.
    pub inputs: BTreeMap<String, String>,
    pub systems: Vec<serde_json::Value>,
    pub tool_version: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    /// Output file name to content fingerprint.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn start(command: impl Into<String>, arguments: Vec<String>) -> Self {
        Self {
            command: command.into(),
            arguments,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            systems: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: Utc::now(),
            finished_at: None,
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_output(&mut self, name: impl Into<String>, contents: &[u8]) {
        self.outputs
            .insert(name.into(), crate::util::sha256_hex(contents));
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(Utc::now());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
