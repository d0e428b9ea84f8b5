//! Artifact types exchanged between agents, referential-integrity validation
//! and canonical serialization.
//!
//! Every type is a plain immutable value serialized as UTF-8 JSON with the
//! field names used here. [`canonicalize`] produces the byte form used for
//! digests: sorted object keys, unordered lists sorted by id, semantic lists
//! (messages, participants, members) left in declared order.

mod canonical;
mod types;
mod validate;

use thiserror::Error;

pub use canonical::{
    canonical_bytes, canonicalize, package_digest, sha256_hex, sort_unordered, write_canonical_json,
};
pub use types::*;
pub use validate::{validate_package, IntegrityViolation, ViolationKind};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("package has {} integrity violation(s); first: {}", .0.len(), .0.first().map(|v| v.path.as_str()).unwrap_or(""))]
    InvalidPackage(Vec<IntegrityViolation>),
    #[error("malformed package JSON: {0}")]
    Malformed(#[from] serde_json::Error),
}

/// Parses a package from JSON. Structural schema failures surface here, not
/// in [`validate_package`].
pub fn parse_package(bytes: &[u8]) -> Result<DesignPackage, ArtifactError> {
    Ok(serde_json::from_slice(bytes)?)
}
