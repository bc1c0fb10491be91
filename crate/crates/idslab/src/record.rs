//! Config hashing, run records and the on-disk result cache.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::RunError;

pub const RECORD_FILE: &str = "run_record.json";

/// 64-bit hex digest of the command and its canonical config.
pub fn config_hash(config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(config.command.as_str().as_bytes());
    h.update(b"\n");
    h.update(config.to_canonical_toml().as_bytes());
    hex::encode(&h.finalize()[..8])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub artifact_version: String,
    pub command: String,
    /// Seconds spent computing (of the original run, for cache hits).
    pub wall_time: f64,
    pub files: Vec<FileEntry>,
    pub cached: bool,
    /// `None` for commands without a theorem verdict.
    pub verdict: Option<bool>,
}

/// Rendered outputs of one run, held in memory until written.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub verdict: Option<bool>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn manifest(&self) -> Vec<FileEntry> {
        self.files
            .iter()
            .map(|(name, b)| FileEntry {
                name: name.clone(),
                bytes: b.len() as u64,
                sha256: sha256_hex(b),
            })
            .collect()
    }
}

/// `IDSLAB_CACHE_DIR`, else `.idslab-cache` in the working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("IDSLAB_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".idslab-cache"))
}

pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn entry(&self, hash: &str) -> PathBuf {
        self.root.join(hash)
    }

    /// A complete, checksum-verified cache entry, if there is one.
    pub fn load(&self, hash: &str) -> Option<(RunRecord, Outputs)> {
        let dir = self.entry(hash);
        let record: RunRecord =
            serde_json::from_slice(&fs::read(dir.join(RECORD_FILE)).ok()?).ok()?;
        if record.config_hash != hash {
            return None;
        }
        let mut out = Outputs {
            files: Vec::new(),
            verdict: record.verdict,
        };
        for f in &record.files {
            let bytes = fs::read(dir.join(&f.name)).ok()?;
            if sha256_hex(&bytes) != f.sha256 {
                return None;
            }
            out.files.push((f.name.clone(), bytes));
        }
        Some((record, out))
    }

    /// Stores an entry atomically: written under a temporary name, then renamed.
    pub fn store(&self, record: &RunRecord, outputs: &Outputs) -> Result<(), RunError> {
        fs::create_dir_all(&self.root).map_err(RunError::io(&self.root))?;
        let dest = self.entry(&record.config_hash);
        let tmp = self.root.join(format!(
            ".{}.{}.tmp",
            record.config_hash,
            std::process::id()
        ));
        let _ = fs::remove_dir_all(&tmp);
        let result = write_files(&tmp, outputs).and_then(|()| {
            let json = serde_json::to_vec_pretty(record).expect("record serializes");
            fs::write(tmp.join(RECORD_FILE), json).map_err(RunError::io(tmp.join(RECORD_FILE)))?;
            let _ = fs::remove_dir_all(&dest);
            fs::rename(&tmp, &dest).map_err(RunError::io(&dest))
        });
        if result.is_err() {
            let _ = fs::remove_dir_all(&tmp);
        }
        result
    }
}

/// Writes every output into `dir`. On failure the files written so far are removed.
pub fn write_files(dir: &Path, outputs: &Outputs) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(RunError::io(dir))?;
    let mut written = Vec::new();
    for (name, bytes) in &outputs.files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(RunError::Io { path, source: e });
        }
        written.push(path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let mut out = Outputs::default();
        out.add("a.csv", b"x,y\n1,2\n".to_vec());
        out.verdict = Some(true);
        let record = RunRecord {
            config_hash: "0123456789abcdef".into(),
            artifact_version: "t".into(),
            command: "ids".into(),
            wall_time: 1.5,
            files: out.manifest(),
            cached: false,
            verdict: Some(true),
        };
        cache.store(&record, &out).unwrap();
        let (r, o) = cache.load("0123456789abcdef").unwrap();
        assert_eq!(r, record);
        assert_eq!(o.files, out.files);
        fs::write(
            dir.path().join("0123456789abcdef").join("a.csv"),
            b"tampered",
        )
        .unwrap();
        assert!(cache.load("0123456789abcdef").is_none());
        assert!(cache.load("ffffffffffffffff").is_none());
    }
}
