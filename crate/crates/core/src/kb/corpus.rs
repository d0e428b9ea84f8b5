//! Directory corpora described by a `manifest.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KbError, KnowledgeIndex, SourceKind};
use crate::Role;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Path relative to the manifest's directory.
    pub file: String,
    pub source_kind: SourceKind,
    pub role_tags: Vec<Role>,
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, KbError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| KbError::IndexUnavailable(format!("{}: {e}", path.display())))
}

impl KnowledgeIndex {
    /// Ingests every manifest entry in order. Returns the chunk ids per entry.
    pub fn ingest_corpus(&mut self, dir: &Path) -> Result<Vec<Vec<String>>, KbError> {
        let mut out = Vec::new();
        for entry in read_manifest(dir)? {
            let text = fs::read_to_string(dir.join(&entry.file))?;
            out.push(self.ingest(&text, entry.source_kind, &entry.role_tags)?);
        }
        Ok(out)
    }
}
