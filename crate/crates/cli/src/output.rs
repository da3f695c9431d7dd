//! Output envelopes: every JSON and CSV file carries the software version,
//! the config hash and the seed.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

pub const SOFTWARE: &str = concat!("reqo ", env!("CARGO_PKG_VERSION"));

/// Written when a command runs without a config (only `selftest`).
const NO_CONFIG: &str = "none";

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub software: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a crate::config::ExperimentConfig>,
    result: &'a T,
}

/// Everything a command needs besides its own logic.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: Option<LoadedConfig>,
    pub seed: u64,
}

impl RunContext {
    pub fn new(config: Option<LoadedConfig>, seed_override: Option<u64>) -> Self {
        let seed = seed_override.or_else(|| config.as_ref().and_then(|c| c.config.seed)).unwrap_or(0);
        Self { config, seed }
    }

    pub fn config(&self) -> CliResult<&LoadedConfig> {
        self.config.as_ref().ok_or_else(|| CliError::Config("this command needs --config".into()))
    }

    pub fn meta(&self, command: &'static str) -> Meta {
        Meta {
            software: SOFTWARE,
            command,
            config_sha256: self.config.as_ref().map_or_else(|| NO_CONFIG.to_string(), |c| c.hash.clone()),
            seed: self.seed,
        }
    }

    /// Pretty JSON with a trailing newline: `{meta, config, result}`.
    pub fn json<T: Serialize>(&self, command: &'static str, result: &T) -> CliResult<Vec<u8>> {
        let meta = self.meta(command);
        let envelope = Envelope { meta: &meta, config: self.config.as_ref().map(|c| &c.config), result };
        let mut bytes = serde_json::to_vec_pretty(&envelope).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// RFC-4180 CSV; `R`'s field order is the column order.
    pub fn csv<R: Serialize>(&self, rows: &[R]) -> CliResult<Vec<u8>> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        for row in rows {
            writer.serialize(row)?;
        }
        writer.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }
}

#[derive(Debug, Clone)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Files to write plus a human summary. `failure` is set when the command
/// produced its outputs but must still exit non-zero.
#[derive(Debug)]
pub struct CommandOutput {
    pub files: Vec<OutputFile>,
    pub summary: String,
    pub failure: Option<CliError>,
}

impl CommandOutput {
    pub fn new(summary: String) -> Self {
        Self { files: Vec::new(), summary, failure: None }
    }

    pub fn with_file(mut self, name: &str, bytes: Vec<u8>) -> Self {
        self.files.push(OutputFile { name: name.to_string(), bytes });
        self
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.name == name).map(|f| f.bytes.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for file in &self.files {
            let path = dir.join(&file.name);
            std::fs::write(&path, &file.bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
