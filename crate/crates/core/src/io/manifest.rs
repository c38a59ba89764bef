use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, IoError};
pub use crate::view_graph::TreeSummary;

/// Record of one command invocation: enough to replay it and to audit what
/// it produced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeSummary>,
    /// Pair used to place each tree root.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bootstrap: Vec<(usize, usize)>,
    #[serde(default)]
    pub predict_calls: usize,
    #[serde(default)]
    pub init_pair_calls: usize,
    /// Wall-clock seconds per stage; left empty where outputs must be
    /// byte-reproducible.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings_s: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self { command: command.to_string(), config, seed, ..Self::default() }
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        read_json(path)
    }
}
