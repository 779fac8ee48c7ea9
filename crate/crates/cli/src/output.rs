//! Run directory: hashed artifacts and the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FORMAT: &str = "advsec-run-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "run.log";

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    format: &'static str,
    version: u32,
    command: &'a str,
    library_version: &'static str,
    config: &'a Value,
    seeds: &'a BTreeMap<String, u64>,
    workers: usize,
    started_unix_seconds: u64,
    wall_clock_seconds: f64,
    results: &'a Value,
    files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects artifacts written during one command.
pub struct RunDir {
    root: PathBuf,
    files: BTreeMap<String, FileEntry>,
    started: Instant,
    started_unix: u64,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `content` at the relative path `rel` and records its hash.
    pub fn write(&mut self, rel: &str, content: impl AsRef<[u8]>) -> Result<(), CliError> {
        let bytes = content.as_ref();
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        log::debug!("wrote {rel}");
        self.record(rel, bytes);
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, rel: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text)
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.files.insert(
            rel.to_string(),
            FileEntry {
                path: rel.to_string(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            },
        );
    }

    /// Hashes the log and writes the manifest listing every artifact.
    pub fn finish(
        mut self,
        command: &str,
        config: &Value,
        seeds: &BTreeMap<String, u64>,
        workers: usize,
        results: &Value,
    ) -> Result<PathBuf, CliError> {
        crate::logging::detach_file();
        let log_path = self.root.join(LOG_FILE);
        if let Ok(bytes) = std::fs::read(&log_path) {
            self.record(LOG_FILE, &bytes);
        }
        let manifest = Manifest {
            format: MANIFEST_FORMAT,
            version: MANIFEST_VERSION,
            command,
            library_version: env!("CARGO_PKG_VERSION"),
            config,
            seeds,
            workers,
            started_unix_seconds: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            results,
            files: self.files.into_values().collect(),
        };
        let path = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_abc() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lists_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path()).unwrap();
        run.write("sub/a.csv", "x\n").unwrap();
        let path = run
            .finish("train", &Value::Null, &BTreeMap::new(), 1, &Value::Null)
            .unwrap();
        let m: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m["files"][0]["path"], "sub/a.csv");
        assert_eq!(m["files"][0]["sha256"], sha256_hex(b"x\n"));
        assert_eq!(m["format"], MANIFEST_FORMAT);
    }
}
