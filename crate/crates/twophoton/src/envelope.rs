use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::format::round_json;

pub const SCHEMA_VERSION: u32 = 1;

/// The JSON document every subcommand prints.
///
/// Object keys serialize in sorted order and floats carry nine significant
/// digits, so re-serializing a parsed envelope reproduces the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEnvelope {
    pub command: String,
    pub schema_version: u32,
    pub parameters: Value,
    pub results: Value,
}

impl OutputEnvelope {
    pub fn new(
        command: &str,
        parameters: impl Serialize,
        results: impl Serialize,
    ) -> serde_json::Result<Self> {
        Ok(Self {
            command: command.to_owned(),
            schema_version: SCHEMA_VERSION,
            parameters: round_json(serde_json::to_value(parameters)?),
            results: round_json(serde_json::to_value(results)?),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope values are finite JSON")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
