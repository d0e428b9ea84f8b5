use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::types::DesignPackage;
use super::validate::validate_package;
use super::ArtifactError;

/// Writes `value` as compact JSON with object keys in byte order, independent
/// of how the `serde_json` map type is configured.
pub fn write_canonical_json(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.iter().collect();
            entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
            out.push(b'{');
            for (i, (key, val)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                out.extend_from_slice(Value::String(key.clone()).to_string().as_bytes());
                out.push(b':');
                write_canonical_json(val, out);
            }
            out.push(b'}');
        }
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_canonical_json(item, out);
            }
            out.push(b']');
        }
        scalar => out.extend_from_slice(scalar.to_string().as_bytes()),
    }
}

pub fn canonical_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let value = serde_json::to_value(value).expect("artifact types serialize infallibly");
    let mut out = Vec::new();
    write_canonical_json(&value, &mut out);
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reorders every list whose order carries no meaning. Sequence models,
/// participants, messages and member lists keep their declared order.
pub fn sort_unordered(pkg: &mut DesignPackage) {
    pkg.requirement_set
        .requirements
        .sort_by(|a, b| a.id.cmp(&b.id));
    pkg.asr_tags
        .sort_by(|a, b| a.requirement_id.cmp(&b.requirement_id));
    pkg.risk_flags.sort_by(|a, b| a.id.cmp(&b.id));
    pkg.clarifications
        .sort_by(|a, b| a.question_id.cmp(&b.question_id));
    pkg.qa_priorities.sort_by_key(|p| p.rank);
    pkg.adrs.sort_by(|a, b| a.id.cmp(&b.id));
    pkg.logical_view.components.sort_by(|a, b| a.id.cmp(&b.id));
    pkg.logical_view
        .relations
        .sort_by(|a, b| (&a.from_id, &a.to_id, a.kind).cmp(&(&b.from_id, &b.to_id, b.kind)));
    pkg.physical_view.nodes.sort_by(|a, b| a.id.cmp(&b.id));
    pkg.physical_view
        .allocations
        .sort_by(|a, b| (&a.component_id, &a.node_id).cmp(&(&b.component_id, &b.node_id)));
    pkg.physical_view.links.sort_by(|a, b| {
        (&a.node_a, &a.node_b, &a.protocol).cmp(&(&b.node_a, &b.node_b, &b.protocol))
    });
    pkg.class_model.classes.sort_by(|a, b| a.name.cmp(&b.name));
    pkg.class_model
        .relations
        .sort_by(|a, b| (&a.from, &a.to, a.kind).cmp(&(&b.from, &b.to, b.kind)));
    let deployment = &mut pkg.deployment_model;
    deployment.nodes.sort_by(|a, b| a.name.cmp(&b.name));
    deployment.artifacts.sort_by(|a, b| a.name.cmp(&b.name));
    deployment
        .placements
        .sort_by(|a, b| (&a.artifact, &a.node).cmp(&(&b.artifact, &b.node)));
    deployment
        .paths
        .sort_by(|a, b| (&a.from, &a.to, &a.label).cmp(&(&b.from, &b.to, &b.label)));
    pkg.traceability_links.sort();
}

/// Deterministic byte form of a consistent package.
pub fn canonicalize(pkg: &DesignPackage) -> Result<Vec<u8>, ArtifactError> {
    let violations = validate_package(pkg);
    if !violations.is_empty() {
        return Err(ArtifactError::InvalidPackage(violations));
    }
    let mut sorted = pkg.clone();
    sort_unordered(&mut sorted);
    Ok(canonical_bytes(&sorted))
}

/// Hex SHA-256 of the canonical form.
pub fn package_digest(pkg: &DesignPackage) -> Result<String, ArtifactError> {
    canonicalize(pkg).map(|bytes| sha256_hex(&bytes))
}
