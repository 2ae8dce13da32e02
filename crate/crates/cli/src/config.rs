//! Settings read from a `bessel-exit.toml` file.
//!
//! The file holds plain `key = value` lines (a subset of TOML). Recognised
//! keys are `cache_dir`, `constants_file`, `workers` and `format`; anything
//! else is rejected so that typos do not pass silently. A value given on the
//! command line or through the environment always wins over the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_FILE: &str = "bessel-exit.toml";

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub cache_dir: Option<PathBuf>,
    pub constants_file: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config file: {e}")))
    }

    /// Reads `explicit` if given (it must exist), otherwise `bessel-exit.toml`
    /// in the working directory if present.
    pub fn load(explicit: Option<&Path>) -> CliResult<Self> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => {
                let p = PathBuf::from(DEFAULT_FILE);
                if !p.exists() {
                    return Ok(Self::default());
                }
                p
            }
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        log::debug!("using config file {}", path.display());
        Self::parse(&text)
    }
}
