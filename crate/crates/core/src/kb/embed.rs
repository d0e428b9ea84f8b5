use serde::{Deserialize, Serialize};

use super::KbError;

pub const HASH_DIMENSION: usize = 64;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME)
    })
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// L2-normalizes `raw`. Returns `None` for the zero vector.
    pub fn normalized(raw: &[f64]) -> Option<Self> {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        Some(EmbeddingVector(
            raw.iter().map(|x| (x / norm) as f32).collect(),
        ))
    }

    pub fn from_components(components: Vec<f32>) -> Self {
        EmbeddingVector(components)
    }

    pub fn components(&self) -> &[f32] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|x| f64::from(*x) * f64::from(*x))
            .sum::<f64>()
            .sqrt()
    }
}

/// Cosine similarity of two unit vectors, clamped to `[0, 1]`.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum();
    dot.clamp(0.0, 1.0)
}

/// Pluggable text embedder. Implementations must be deterministic and
/// return unit vectors of [`Embedder::dimension`] components.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, KbError>;
}

/// Reference embedder: each token bumps component `fnv1a64(token) mod 64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashEmbedder;

impl HashEmbedder {
    pub const NAME: &'static str = "fnv1a-token-hash-64";
}

impl Embedder for HashEmbedder {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dimension(&self) -> usize {
        HASH_DIMENSION
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, KbError> {
        embed(text)
    }
}

pub fn embed(text: &str) -> Result<EmbeddingVector, KbError> {
    let mut counts = [0f64; HASH_DIMENSION];
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(KbError::EmptyText);
    }
    for token in tokens {
        counts[(fnv1a64(token.as_bytes()) % HASH_DIMENSION as u64) as usize] += 1.0;
    }
    EmbeddingVector::normalized(&counts).ok_or(KbError::EmptyText)
}
