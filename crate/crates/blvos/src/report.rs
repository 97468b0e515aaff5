//! Report envelope shared by every command: enough provenance to reproduce a
//! run byte-identically.

use serde::Serialize;

/// Wrapper around a command's payload. Field order is the serialization
/// order; nothing time- or host-dependent is recorded.
#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    /// "default" or the path of the model override file.
    pub model_source: String,
    /// Hash over the resolved model tables plus the run parameters.
    pub config_hash: String,
    pub resolved: serde_json::Value,
    pub data: T,
}

pub const TOOL_NAME: &str = "blvos";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;

impl<T: Serialize> Report<T> {
    pub fn new(
        command: &str,
        seed: u64,
        threads: usize,
        model_source: String,
        config_hash: String,
        resolved: serde_json::Value,
        data: T,
    ) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command: command.to_string(),
            seed,
            threads,
            model_source,
            config_hash,
            resolved,
            data,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail") + "\n"
    }
}

/// Minimal CSV quoting: wrap fields containing separators.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
        + "\n"
}
