//! Staged output writing with a content-hash manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.toml";

/// A file produced by a stage, held in memory until the stage succeeds.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }

    pub fn text(name: impl Into<String>, s: String) -> Self {
        Artifact::new(name, s.into_bytes())
    }
}

#[derive(Debug, Serialize)]
struct FileRecord {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct StageRecord {
    name: String,
    files: Vec<FileRecord>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config_sha256: &'a str,
    seed: u64,
    stages: &'a [StageRecord],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Runner {
    out: PathBuf,
    experiment: String,
    config_hash: String,
    seed: u64,
    stages: Vec<StageRecord>,
}

impl Runner {
    pub fn new(out: &Path, experiment: &str, config_text: &str, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
        let r = Runner {
            out: out.to_path_buf(),
            experiment: experiment.to_string(),
            config_hash: sha256_hex(config_text.as_bytes()),
            seed,
            stages: Vec::new(),
        };
        r.write_manifest()?;
        Ok(r)
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let m = Manifest {
            experiment: &self.experiment,
            config_sha256: &self.config_hash,
            seed: self.seed,
            stages: &self.stages,
        };
        let text = toml::to_string(&m).expect("manifest serializes");
        let p = self.out.join(MANIFEST);
        std::fs::write(&p, text).map_err(|e| io(&p, e))
    }

    /// Run one stage; its files reach the disk and the manifest only if it succeeds.
    pub fn stage<T>(
        &mut self,
        name: &str,
        f: impl FnOnce() -> hypnet_core::Result<(T, Vec<Artifact>)>,
    ) -> Result<T, CliError> {
        let (value, artifacts) = f().map_err(|e| CliError::Stage {
            stage: name.to_string(),
            source: e,
        })?;
        let mut files = Vec::with_capacity(artifacts.len());
        for a in artifacts {
            let p = self.out.join(&a.name);
            std::fs::write(&p, &a.bytes).map_err(|e| io(&p, e))?;
            files.push(FileRecord {
                path: a.name,
                sha256: sha256_hex(&a.bytes),
                bytes: a.bytes.len(),
            });
        }
        self.stages.push(StageRecord {
            name: name.to_string(),
            files,
        });
        self.write_manifest()?;
        Ok(value)
    }

    pub fn out(&self) -> &Path {
        &self.out
    }
}

fn io(p: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: p.display().to_string(),
        source: e,
    }
}
