use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub dqdsim: &'static str,
    pub dqdsim_cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { dqdsim: dqdsim::VERSION, dqdsim_cli: env!("CARGO_PKG_VERSION") }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

/// `<out>.manifest.json` next to the main output.
pub fn default_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
