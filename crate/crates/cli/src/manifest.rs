use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::{runtime, CliResult};

pub const TOOL_NAME: &str = "ema";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Written next to every run's outputs. The timestamp is the only
/// wall-clock value anywhere in the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: Option<String>,
    /// Artifact role to path, e.g. `metrics_csv`.
    pub artifacts: BTreeMap<String, String>,
    pub started_at: String,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: Option<String>, started: OffsetDateTime) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config_hash,
            artifacts: BTreeMap::new(),
            started_at: started.format(&Rfc3339).unwrap_or_default(),
        }
    }

    pub fn add_artifact(&mut self, role: &str, path: &Path) {
        self.artifacts.insert(role.into(), path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self).map_err(runtime)?;
        std::fs::write(path, json + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))
    }
}
