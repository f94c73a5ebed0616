use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::{CliError, CliResult};
use crate::Command;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

/// Record written next to every output so the run can be reproduced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub argv: Vec<String>,
    /// The parsed command with every option resolved, replayable as is.
    pub command: Command,
    /// Parameter set after merging the params file with command-line flags.
    pub params: Value,
    pub inputs: Vec<PathBuf>,
    /// Output file names, relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// Headline numbers of the run.
    pub summary: Value,
}

impl RunManifest {
    pub fn new(command: &Command, params: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default(),
            argv: std::env::args().collect(),
            command: command.clone(),
            params,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("bad manifest {}: {e}", path.display())))
    }

    /// Writes `<out_dir>/<stem>.manifest.json`.
    pub fn write(&self, out_dir: &Path, stem: &str) -> CliResult<PathBuf> {
        let path = out_dir.join(format!("{stem}{MANIFEST_SUFFIX}"));
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn output_paths(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        self.outputs.iter().map(|o| dir.join(o)).collect()
    }
}
