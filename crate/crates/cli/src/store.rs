//! Content-addressed artifacts: every file carries the key it was computed
//! for, the config hash, and a hash of everything it was computed from.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use conceptsim::corpus::sha256_hex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub stage: String,
    pub key: serde_json::Value,
    pub config_hash: String,
    pub input_hash: String,
    pub payload: T,
}

/// What a stage did with one artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Written,
    /// Inputs unchanged; file left as is.
    Skipped,
    /// Inputs unchanged; only the config hash was refreshed.
    Restamped,
}

pub fn hash_value(value: &serde_json::Value) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("json value serializes"))
}

/// Writes through a temporary file so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn write_envelope<T: Serialize>(path: &Path, env: &Envelope<T>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(env)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_envelope<T: DeserializeOwned>(path: &Path) -> Result<Envelope<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The stored envelope if it was computed from `input_hash`.
pub fn load_current<T: DeserializeOwned>(path: &Path, input_hash: &str) -> Option<Envelope<T>> {
    if !path.is_file() {
        return None;
    }
    match read_envelope::<T>(path) {
        Ok(env) if env.input_hash == input_hash => Some(env),
        Ok(_) => None,
        Err(e) => {
            log::warn!("ignoring unreadable artifact: {e:#}");
            None
        }
    }
}

/// Writes `payload` unless an envelope with the same inputs exists; a stale
/// config hash is refreshed without recomputing.
pub fn store<T, F>(
    path: &Path,
    stage: &str,
    key: serde_json::Value,
    config_hash: &str,
    input_hash: &str,
    compute: F,
) -> Result<Outcome>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<T>,
{
    if let Some(mut env) = load_current::<T>(path, input_hash) {
        if env.config_hash == config_hash && env.key == key {
            return Ok(Outcome::Skipped);
        }
        env.config_hash = config_hash.to_string();
        env.key = key;
        write_envelope(path, &env)?;
        return Ok(Outcome::Restamped);
    }
    let env = Envelope {
        stage: stage.to_string(),
        key,
        config_hash: config_hash.to_string(),
        input_hash: input_hash.to_string(),
        payload: compute()?,
    };
    write_envelope(path, &env)?;
    Ok(Outcome::Written)
}

/// Per-stage tally of what happened.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub written: usize,
    pub skipped: usize,
    pub restamped: usize,
    pub failed: Vec<String>,
}

impl StageReport {
    pub fn new(stage: &str) -> Self {
        Self {
            stage: stage.to_string(),
            ..Self::default()
        }
    }

    pub fn count(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Written => self.written += 1,
            Outcome::Skipped => self.skipped += 1,
            Outcome::Restamped => self.restamped += 1,
        }
    }

    pub fn merge(&mut self, other: StageReport) {
        self.written += other.written;
        self.skipped += other.skipped;
        self.restamped += other.restamped;
        self.failed.extend(other.failed);
    }
}

impl std::fmt::Display for StageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} written, {} unchanged, {} restamped, {} failed",
            self.stage,
            self.written,
            self.skipped,
            self.restamped,
            self.failed.len()
        )
    }
}
