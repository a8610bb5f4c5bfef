//! Artifact directory: stamped writes, hash-checked reads, seed registry.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::stage::Stage;

pub const REGISTRY_FILE: &str = "registry.tsv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The config hash stamped into an artifact, whichever syntax it uses:
/// `config_hash=<h>` in headers and comments, `"config_hash": "<h>"` in JSON.
pub fn embedded_hash(text: &str) -> Option<&str> {
    let is_hex = |c: char| c.is_ascii_hexdigit();
    if let Some(i) = text.find("config_hash=") {
        let rest = &text[i + "config_hash=".len()..];
        return Some(&rest[..rest.find(|c: char| !is_hex(c)).unwrap_or(rest.len())]);
    }
    let i = text.find("\"config_hash\"")?;
    let rest = text[i + "\"config_hash\"".len()..].trim_start().strip_prefix(':')?.trim_start();
    let rest = rest.strip_prefix('"')?;
    Some(&rest[..rest.find('"')?])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryRecord {
    pub stage: String,
    pub artifact: String,
    pub world: String,
    pub seed: String,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).is_file()
    }

    /// Writes through a temporary file so a crash never leaves a torn
    /// artifact. Returns the content hash.
    pub fn write(&self, rel: &str, text: &str) -> Result<String, CliError> {
        let path = self.path(rel);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("partial");
        fs::write(&tmp, text).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(sha256_hex(text.as_bytes()))
    }

    pub fn remove(&self, rel: &str) -> Result<(), CliError> {
        let path = self.path(rel);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(CliError::Io { path, source: e }),
            _ => Ok(()),
        }
    }

    /// Reads `rel`, produced by `producer`, on behalf of `consumer`; the
    /// stamped hash must equal `expected`.
    pub fn read_checked(&self, consumer: Stage, producer: Stage, rel: &str, expected: &str) -> Result<String, CliError> {
        let path = self.path(rel);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::dependency(
                    consumer,
                    format!("missing {} from stage `{producer}`; run it first", path.display()),
                ))
            }
            Err(source) => return Err(CliError::Io { path, source }),
        };
        match embedded_hash(&text) {
            Some(h) if h == expected => Ok(text),
            found => Err(CliError::dependency(
                consumer,
                format!(
                    "{} was produced by `{producer}` under config {}, the current config gives {expected}; rerun `{producer}`",
                    path.display(),
                    found.unwrap_or("(none)")
                ),
            )),
        }
    }

    pub fn append_record(&self, rec: &RegistryRecord) -> Result<(), CliError> {
        let path = self.path(REGISTRY_FILE);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        fs::create_dir_all(&self.root).map_err(io)?;
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        writeln!(f, "{}\t{}\t{}\t{}\t{}", rec.stage, rec.artifact, rec.world, rec.seed, rec.sha256).map_err(io)
    }

    pub fn list_records(&self) -> Result<Vec<RegistryRecord>, CliError> {
        let path = self.path(REGISTRY_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(CliError::Io { path, source }),
        };
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                let f: Vec<&str> = l.split('\t').collect();
                match f.as_slice() {
                    [stage, artifact, world, seed, sha] => Ok(RegistryRecord {
                        stage: stage.to_string(),
                        artifact: artifact.to_string(),
                        world: world.to_string(),
                        seed: seed.to_string(),
                        sha256: sha.to_string(),
                    }),
                    _ => Err(CliError::Core(topowalk::Error::Parse {
                        line: i + 1,
                        column: 1,
                        message: format!("registry record needs 5 fields, got {}", f.len()),
                    })),
                }
            })
            .collect()
    }
}
