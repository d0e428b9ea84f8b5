//! Knowledge base: chunked documents from design cases, literature and
//! expert transcripts, tagged by the roles they serve, retrieved by exhaustive
//! cosine scan.
//!
//! On-disk layout under a data directory:
//!
//! - `kb/chunks.jsonl`: one [`KnowledgeChunk`] per line
//! - `kb/vectors.dat`: little-endian `f32`, row-major, row `i` = chunk line `i`
//! - `kb/meta.json`: dimension, count, embedder name
//!
//! `meta.json` is written last and acts as the commit point.

mod chunk;
mod corpus;
mod embed;

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Role;

pub use chunk::{chunk_document, MAX_CHUNK_WORDS};
pub use corpus::{read_manifest, ManifestEntry, MANIFEST_FILE};
pub use embed::{
    cosine, embed, fnv1a64, tokenize, Embedder, EmbeddingVector, HashEmbedder, HASH_DIMENSION,
};

/// Results per agent task unless configured otherwise.
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("at least one role tag is required")]
    NoRoleTags,
    #[error("text contains no alphanumeric token")]
    EmptyText,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("knowledge index unavailable: {0}")]
    IndexUnavailable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    DesignCase,
    Literature,
    Expert,
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "design_case" | "design" => Ok(SourceKind::DesignCase),
            "literature" => Ok(SourceKind::Literature),
            "expert" => Ok(SourceKind::Expert),
            other => Err(format!("unknown source kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeChunk {
    pub chunk_id: String,
    pub text: String,
    pub source_kind: SourceKind,
    pub role_tags: Vec<Role>,
    pub doc_id: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub chunk_id: String,
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexMeta {
    dimension: usize,
    count: usize,
    embedder: String,
}

/// In-memory index. Build-then-read: mutate through `&mut`, then share
/// behind an `Arc` for concurrent searches.
#[derive(Clone)]
pub struct KnowledgeIndex {
    embedder: Arc<dyn Embedder>,
    chunks: Vec<KnowledgeChunk>,
    vectors: Vec<f32>,
    documents: usize,
}

impl std::fmt::Debug for KnowledgeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeIndex")
            .field("embedder", &self.embedder.name())
            .field("chunks", &self.chunks.len())
            .field("documents", &self.documents)
            .finish()
    }
}

impl Default for KnowledgeIndex {
    fn default() -> Self {
        KnowledgeIndex::new(Arc::new(HashEmbedder))
    }
}

impl KnowledgeIndex {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        KnowledgeIndex {
            embedder,
            chunks: Vec::new(),
            vectors: Vec::new(),
            documents: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunks(&self) -> &[KnowledgeChunk] {
        &self.chunks
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&KnowledgeChunk> {
        self.chunks.iter().find(|c| c.chunk_id == chunk_id)
    }

    pub fn vector(&self, index: usize) -> &[f32] {
        let dim = self.embedder.dimension();
        &self.vectors[index * dim..(index + 1) * dim]
    }

    /// Chunks, embeds and appends a document. Returns the new chunk ids in
    /// document order.
    pub fn ingest(
        &mut self,
        text: &str,
        source_kind: SourceKind,
        role_tags: &[Role],
    ) -> Result<Vec<String>, KbError> {
        if text.trim().is_empty() {
            return Err(KbError::EmptyDocument);
        }
        if role_tags.is_empty() {
            return Err(KbError::NoRoleTags);
        }
        let mut tags = role_tags.to_vec();
        tags.sort();
        tags.dedup();

        let doc_id = format!("doc{:04}", self.documents);
        let mut staged = Vec::new();
        for (ordinal, piece) in chunk_document(text).into_iter().enumerate() {
            // Chunks without any alphanumeric token cannot be embedded or retrieved.
            let vector = match self.embedder.embed(&piece) {
                Ok(v) => v,
                Err(KbError::EmptyText) => continue,
                Err(e) => return Err(e),
            };
            if vector.dimension() != self.embedder.dimension() {
                return Err(KbError::IndexUnavailable(format!(
                    "embedder returned {} components, declared {}",
                    vector.dimension(),
                    self.embedder.dimension()
                )));
            }
            let chunk = KnowledgeChunk {
                chunk_id: format!("{doc_id}-{ordinal:03}"),
                text: piece,
                source_kind,
                role_tags: tags.clone(),
                doc_id: doc_id.clone(),
                ordinal,
            };
            staged.push((chunk, vector));
        }
        if staged.is_empty() {
            return Err(KbError::EmptyDocument);
        }
        self.documents += 1;
        let mut ids = Vec::with_capacity(staged.len());
        for (chunk, vector) in staged {
            ids.push(chunk.chunk_id.clone());
            self.chunks.push(chunk);
            self.vectors.extend_from_slice(vector.components());
        }
        Ok(ids)
    }

    /// Top-`k` chunks tagged with `role`, by descending cosine similarity;
    /// ties go to the earlier-ingested chunk.
    pub fn search(&self, query: &str, role: Role, k: usize) -> Result<Vec<SearchHit>, KbError> {
        if k == 0 {
            return Err(KbError::InvalidK);
        }
        let q = self.embedder.embed(query)?;
        let mut scored: Vec<(usize, f64)> = self
            .chunks
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role_tags.contains(&role))
            .map(|(i, _)| (i, cosine(q.components(), self.vector(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(i, score)| SearchHit {
                chunk_id: self.chunks[i].chunk_id.clone(),
                score,
            })
            .collect())
    }

    /// Persists to `<dir>/kb/`. Each file is written to a temporary name and
    /// renamed; `meta.json` goes last.
    pub fn save(&self, data_dir: &Path) -> Result<(), KbError> {
        let dir = data_dir.join("kb");
        fs::create_dir_all(&dir)?;

        let mut lines = Vec::new();
        for chunk in &self.chunks {
            serde_json::to_writer(&mut lines, chunk).map_err(std::io::Error::other)?;
            lines.push(b'\n');
        }
        let mut vectors = Vec::with_capacity(self.vectors.len() * 4);
        for v in &self.vectors {
            vectors.extend_from_slice(&v.to_le_bytes());
        }
        let meta = IndexMeta {
            dimension: self.embedder.dimension(),
            count: self.chunks.len(),
            embedder: self.embedder.name().to_string(),
        };
        let meta = serde_json::to_vec_pretty(&meta).map_err(std::io::Error::other)?;

        write_atomic(&dir.join("chunks.jsonl"), &lines)?;
        write_atomic(&dir.join("vectors.dat"), &vectors)?;
        write_atomic(&dir.join("meta.json"), &meta)?;
        Ok(())
    }

    /// Loads `<dir>/kb/`. A missing directory yields an empty index; a
    /// present but inconsistent one is [`KbError::IndexUnavailable`].
    pub fn load(data_dir: &Path, embedder: Arc<dyn Embedder>) -> Result<Self, KbError> {
        let dir = data_dir.join("kb");
        let meta_path = dir.join("meta.json");
        if !meta_path.exists() {
            return Ok(KnowledgeIndex::new(embedder));
        }
        let unavailable = |msg: String| KbError::IndexUnavailable(msg);
        let meta: IndexMeta = serde_json::from_slice(&fs::read(&meta_path)?)
            .map_err(|e| unavailable(format!("meta.json: {e}")))?;
        if meta.dimension != embedder.dimension() || meta.embedder != embedder.name() {
            return Err(unavailable(format!(
                "index built with {} ({} dims), configured embedder is {} ({} dims)",
                meta.embedder,
                meta.dimension,
                embedder.name(),
                embedder.dimension()
            )));
        }
        let mut chunks = Vec::new();
        let reader = BufReader::new(fs::File::open(dir.join("chunks.jsonl"))?);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let chunk: KnowledgeChunk = serde_json::from_str(&line)
                .map_err(|e| unavailable(format!("chunks.jsonl line {}: {e}", i + 1)))?;
            chunks.push(chunk);
        }
        let raw = fs::read(dir.join("vectors.dat"))?;
        if chunks.len() != meta.count || raw.len() != meta.count * meta.dimension * 4 {
            return Err(unavailable(format!(
                "meta declares {} chunks, found {} records and {} vector bytes",
                meta.count,
                chunks.len(),
                raw.len()
            )));
        }
        let vectors = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let mut docs: Vec<&str> = chunks.iter().map(|c| c.doc_id.as_str()).collect();
        docs.dedup();
        let documents = docs.len();
        Ok(KnowledgeIndex {
            embedder,
            chunks,
            vectors,
            documents,
        })
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(tmp, path)
}
