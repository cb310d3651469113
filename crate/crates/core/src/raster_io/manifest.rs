//! Dataset manifests: one `image;mask[;av_labels]` entry per line.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub av_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Parses manifest text. Relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(';').map(str::trim).collect();
            let err = |message: String| Error::ParseLine {
                line: i + 1,
                message,
            };
            if fields.len() < 2 {
                return Err(err("expected image;mask[;av_labels]".into()));
            }
            if fields.len() > 3 {
                return Err(err(format!("expected at most 3 fields, got {}", fields.len())));
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(err("empty path field".into()));
            }
            let mut seen: Vec<&str> = Vec::new();
            for f in &fields {
                if seen.contains(f) {
                    return Err(err(format!("path {f:?} repeated within one entry")));
                }
                seen.push(f);
            }
            entries.push(ManifestEntry {
                image: base.join(fields[0]),
                mask: base.join(fields[1]),
                av_labels: fields.get(2).map(|f| base.join(f)),
            });
        }
        if entries.is_empty() {
            return Err(Error::ParseLine {
                line: text.lines().count().max(1),
                message: "manifest has no entries".into(),
            });
        }
        Ok(Self { entries })
    }
}

/// Reads a manifest; relative paths resolve against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    DatasetManifest::parse(&text, base)
}
