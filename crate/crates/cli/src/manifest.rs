use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bessel_exit::special::ZERO_TABLE_FORMAT;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// What produced an output file: the command, its fully resolved
/// parameters, and the versions involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub versions: BTreeMap<String, String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("bessel-exit".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("zero_table_format".into(), ZERO_TABLE_FORMAT.to_string());
        RunManifest {
            command: command.into(),
            parameters: BTreeMap::new(),
            versions,
            timestamp: timestamp(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    /// Floats in their shortest round-trip form (`1e-14`, not `0.00000000000001`).
    pub fn with_f64(self, key: &str, value: f64) -> Self {
        self.with(key, format!("{value:?}"))
    }

    pub fn with_opt<T: ToString>(self, key: &str, value: Option<T>) -> Self {
        match value {
            Some(v) => self.with(key, v),
            None => self,
        }
    }

    /// Manifest path next to an output file: `<file>.manifest.json`.
    pub fn sidecar(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

/// Current UTC time, or `SOURCE_DATE_EPOCH` when set, for reproducible
/// artefacts.
fn timestamp() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| DateTime::<Utc>::from_timestamp(s, 0));
    fixed
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}
