//! Output directory bookkeeping: every file is hashed and listed in `manifest.json`
//! together with the seed and the hash of the echoed config.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use wvalab::table::Table;

use crate::config::Format;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    seed: u64,
    config_hash: String,
    echo: String,
    files: Vec<(String, String)>,
}

impl Output {
    pub fn new(dir: PathBuf, formats: Vec<Format>, seed: u64, echo: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir,
            formats,
            seed,
            config_hash: sha256_hex(echo.as_bytes()),
            echo,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    fn stamped<T: Serialize>(&self, key: &str, value: &T) -> Value {
        json!({
            "seed": self.seed,
            "config_sha256": self.config_hash,
            key: value,
        })
    }

    /// Writes `table` once per requested format.
    pub fn table(&mut self, table: &Table) -> Result<(), CliError> {
        for format in self.formats.clone() {
            match format {
                Format::Csv => self.write(&format!("{}.csv", table.name), table.to_csv_string().as_bytes())?,
                Format::Json => {
                    let body = serde_json::to_string_pretty(&self.stamped("table", table)).expect("tables serialize");
                    self.write(&format!("{}.json", table.name), body.as_bytes())?
                }
            }
        }
        Ok(())
    }

    /// Writes a JSON report under `name.json`, stamped with seed and config hash.
    pub fn report<T: Serialize>(&mut self, name: &str, report: &T) -> Result<(), CliError> {
        let body = serde_json::to_string_pretty(&self.stamped("report", report)).expect("reports serialize");
        self.write(&format!("{name}.json"), body.as_bytes())
    }

    /// Writes the config echo and the manifest; returns the manifest.
    pub fn finish(mut self, command: &str) -> Result<Value, CliError> {
        let echo = std::mem::take(&mut self.echo);
        self.write("config.json", echo.as_bytes())?;
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(name, hash)| json!({ "name": name, "sha256": hash }))
            .collect();
        let manifest = json!({
            "command": command,
            "seed": self.seed,
            "config_sha256": self.config_hash,
            "directory": self.dir.display().to_string(),
            "files": files,
        });
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(manifest)
    }
}
