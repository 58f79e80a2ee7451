//! Manifest-plus-raw-files directory format.
//!
//! A directory holds `manifest.json` plus one file per entry:
//!
//! * matrices: `<name>.f32`, little-endian IEEE-754 binary32, row-major;
//! * lists: `<name>.txt`, UTF-8, one item per line. Backslash, newline and
//!   carriage return inside an item are escaped as `\\`, `\n` and `\r`.
//!
//! Every file's SHA-256 is recorded in the manifest and re-checked on read.
//! The manifest is written last, so a directory without one is incomplete.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "conceptsim-dir/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListEntry {
    pub file: String,
    pub len: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub kind: String,
    pub meta: serde_json::Value,
    pub matrices: BTreeMap<String, MatrixEntry>,
    pub lists: BTreeMap<String, ListEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn escape_line(item: &str) -> String {
    let mut out = String::with_capacity(item.len());
    for ch in item.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_line(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn encode_f32(m: &Array2<f64>) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(m.len() * 4);
    for &x in m.iter() {
        bytes.extend_from_slice(&(x as f32).to_le_bytes());
    }
    bytes
}

fn encode_list(items: &[String]) -> Vec<u8> {
    let mut text = String::new();
    for item in items {
        text.push_str(&escape_line(item));
        text.push('\n');
    }
    text.into_bytes()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Accumulates files for one directory; `finish` writes the manifest.
#[derive(Debug)]
pub struct DirWriter {
    root: PathBuf,
    matrices: BTreeMap<String, MatrixEntry>,
    lists: BTreeMap<String, ListEntry>,
}

impl DirWriter {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let manifest = root.join(MANIFEST_FILE);
        if manifest.exists() {
            fs::remove_file(&manifest).map_err(|e| Error::io(&manifest, e))?;
        }
        Ok(Self {
            root,
            matrices: BTreeMap::new(),
            lists: BTreeMap::new(),
        })
    }

    pub fn matrix(&mut self, name: &str, m: &Array2<f64>) -> Result<()> {
        let file = format!("{name}.f32");
        let bytes = encode_f32(m);
        write_file(&self.root.join(&file), &bytes)?;
        self.matrices.insert(
            name.to_string(),
            MatrixEntry {
                file,
                rows: m.nrows(),
                cols: m.ncols(),
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(())
    }

    pub fn list(&mut self, name: &str, items: &[String]) -> Result<()> {
        let file = format!("{name}.txt");
        let bytes = encode_list(items);
        write_file(&self.root.join(&file), &bytes)?;
        self.lists.insert(
            name.to_string(),
            ListEntry {
                file,
                len: items.len(),
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(())
    }

    pub fn finish(self, kind: &str, meta: serde_json::Value) -> Result<Manifest> {
        let manifest = Manifest {
            format: FORMAT_TAG.to_string(),
            kind: kind.to_string(),
            meta,
            matrices: self.matrices,
            lists: self.lists,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let tmp = self.root.join(".manifest.json.tmp");
        write_file(&tmp, text.as_bytes())?;
        let dst = self.root.join(MANIFEST_FILE);
        fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone)]
pub struct DirReader {
    root: PathBuf,
    manifest: Manifest,
}

impl DirReader {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Load {
            path: path.clone(),
            message: format!("malformed manifest: {e}"),
        })?;
        if manifest.format != FORMAT_TAG {
            return Err(Error::Load {
                path,
                message: format!("unsupported format tag `{}`", manifest.format),
            });
        }
        Ok(Self { root, manifest })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.manifest.kind == kind {
            Ok(())
        } else {
            Err(Error::Load {
                path: self.root.clone(),
                message: format!("expected a `{kind}` directory, found `{}`", self.manifest.kind),
            })
        }
    }

    fn read_checked(&self, file: &str, sha256: &str) -> Result<Vec<u8>> {
        let path = self.root.join(file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != sha256 {
            return Err(Error::Integrity { path });
        }
        Ok(bytes)
    }

    pub fn has_matrix(&self, name: &str) -> bool {
        self.manifest.matrices.contains_key(name)
    }

    pub fn matrix(&self, name: &str) -> Result<Array2<f64>> {
        let entry = self.manifest.matrices.get(name).ok_or_else(|| Error::Load {
            path: self.root.clone(),
            message: format!("manifest has no matrix `{name}`"),
        })?;
        let bytes = self.read_checked(&entry.file, &entry.sha256)?;
        if bytes.len() != entry.rows * entry.cols * 4 {
            return Err(Error::Load {
                path: self.root.join(&entry.file),
                message: format!(
                    "expected {}x{} binary32 values, found {} bytes",
                    entry.rows,
                    entry.cols,
                    bytes.len()
                ),
            });
        }
        let values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Array2::from_shape_vec((entry.rows, entry.cols), values).map_err(|e| Error::Load {
            path: self.root.join(&entry.file),
            message: e.to_string(),
        })
    }

    pub fn list(&self, name: &str) -> Result<Vec<String>> {
        let entry = self.manifest.lists.get(name).ok_or_else(|| Error::Load {
            path: self.root.clone(),
            message: format!("manifest has no list `{name}`"),
        })?;
        let bytes = self.read_checked(&entry.file, &entry.sha256)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Load {
            path: self.root.join(&entry.file),
            message: format!("not UTF-8: {e}"),
        })?;
        let items: Vec<String> = text.lines().map(unescape_line).collect();
        if items.len() != entry.len {
            return Err(Error::Load {
                path: self.root.join(&entry.file),
                message: format!("expected {} lines, found {}", entry.len, items.len()),
            });
        }
        Ok(items)
    }

    pub fn index_list(&self, name: &str) -> Result<Vec<usize>> {
        self.list(name)?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.trim().parse::<usize>().map_err(|_| Error::Load {
                    path: self.root.join(format!("{name}.txt")),
                    message: format!("line {}: `{s}` is not a class index", i + 1),
                })
            })
            .collect()
    }
}

/// Round every entry to the nearest binary32 value, i.e. what a write/read
/// cycle would produce.
pub fn quantize_f32(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(|x| x as f32 as f64)
}
