use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to rerun a subcommand and identify what it wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

/// Collects the files written by one run. Every file goes through a temp
/// file in the destination directory and is renamed into place.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &Path) -> PathBuf {
        if self.dir == Path::new(".") {
            name.to_path_buf()
        } else {
            self.dir.join(name)
        }
    }

    pub fn write(&mut self, name: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        write_atomic(&target, bytes)?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &Path, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::internal)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `<subcommand>.manifest.json` last, listing every earlier output.
    pub fn finish(
        mut self,
        subcommand: &str,
        seed: u64,
        threads: usize,
        config: serde_json::Value,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            version: ARTIFACT_VERSION.to_string(),
            seed,
            threads,
            config,
            outputs: self.written.iter().map(|p| p.display().to_string()).collect(),
        };
        let name = PathBuf::from(format!("{subcommand}.manifest.json"));
        self.write_json(&name, &manifest)?;
        Ok(manifest)
    }
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    let mut tmp = NamedTempFile::new_in(parent).map_err(|e| CliError::io(parent, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(target, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(target, e))?;
    tmp.persist(target).map_err(|e| CliError::io(target, e.error))?;
    Ok(())
}

/// CSV text with a header row. Floats use the shortest round-trip form, so
/// identical values always print identically.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}
