use std::collections::{HashMap, HashSet};

use crate::artifact::{ClassModel, DeploymentModel, SequenceModel};

use super::lexical::{is_canonical_signature, is_label, is_name, is_type};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelIssueKind {
    DuplicateName,
    DanglingEndpoint,
    Invalid,
}

/// A broken type invariant inside one diagram model. `path` is relative to the
/// model, e.g. `classes[2].name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelIssue {
    pub kind: ModelIssueKind,
    pub path: String,
    pub message: String,
}

impl ModelIssue {
    fn new(kind: ModelIssueKind, path: String, message: String) -> Self {
        ModelIssue {
            kind,
            path,
            message,
        }
    }
}

pub fn check_class_model(model: &ClassModel) -> Vec<ModelIssue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (i, class) in model.classes.iter().enumerate() {
        if !is_name(&class.name) {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("classes[{i}].name"),
                format!("`{}` is not a valid identifier", class.name),
            ));
        }
        if !seen.insert(class.name.as_str()) {
            issues.push(ModelIssue::new(
                ModelIssueKind::DuplicateName,
                format!("classes[{i}].name"),
                format!("class `{}` declared twice", class.name),
            ));
        }
        let mut members = HashSet::new();
        for (j, attr) in class.attributes.iter().enumerate() {
            if !is_name(&attr.name) || !is_type(&attr.ty) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::Invalid,
                    format!("classes[{i}].attributes[{j}]"),
                    format!("`{}: {}` is not a valid attribute", attr.name, attr.ty),
                ));
            }
            if !members.insert(attr.name.as_str()) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::DuplicateName,
                    format!("classes[{i}].attributes[{j}]"),
                    format!("attribute `{}` declared twice", attr.name),
                ));
            }
        }
        for (j, method) in class.methods.iter().enumerate() {
            if !is_canonical_signature(method) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::Invalid,
                    format!("classes[{i}].methods[{j}]"),
                    format!("`{method}` is not a canonical method signature"),
                ));
            }
        }
    }
    for (i, rel) in model.relations.iter().enumerate() {
        for (field, name) in [("from", &rel.from), ("to", &rel.to)] {
            if !seen.contains(name.as_str()) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::DanglingEndpoint,
                    format!("relations[{i}].{field}"),
                    format!("class `{name}` is not declared"),
                ));
            }
        }
    }
    issues
}

pub fn check_sequence_model(model: &SequenceModel) -> Vec<ModelIssue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (i, p) in model.participants.iter().enumerate() {
        if !is_name(&p.name) {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("participants[{i}].name"),
                format!("`{}` is not a valid identifier", p.name),
            ));
        }
        if !seen.insert(p.name.as_str()) {
            issues.push(ModelIssue::new(
                ModelIssueKind::DuplicateName,
                format!("participants[{i}].name"),
                format!("participant `{}` declared twice", p.name),
            ));
        }
    }
    for (i, m) in model.messages.iter().enumerate() {
        let expected = i as u32 + 1;
        if m.seq_index != expected {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("messages[{i}].seq_index"),
                format!("expected seq_index {expected}, found {}", m.seq_index),
            ));
        }
        for (field, name) in [("from", &m.from), ("to", &m.to)] {
            if !seen.contains(name.as_str()) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::DanglingEndpoint,
                    format!("messages[{i}].{field}"),
                    format!("participant `{name}` is not declared"),
                ));
            }
        }
        if !is_label(&m.label) {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("messages[{i}].label"),
                "label must be a non-empty single trimmed line".to_string(),
            ));
        }
    }
    issues
}

pub fn check_deployment_model(model: &DeploymentModel) -> Vec<ModelIssue> {
    let mut issues = Vec::new();
    let mut names = HashSet::new();
    let mut nodes = HashSet::new();
    for (i, n) in model.nodes.iter().enumerate() {
        if !is_name(&n.name) {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("nodes[{i}].name"),
                format!("`{}` is not a valid identifier", n.name),
            ));
        }
        if !names.insert(n.name.as_str()) {
            issues.push(ModelIssue::new(
                ModelIssueKind::DuplicateName,
                format!("nodes[{i}].name"),
                format!("name `{}` declared twice", n.name),
            ));
        }
        nodes.insert(n.name.as_str());
    }
    let mut artifacts = HashSet::new();
    for (i, a) in model.artifacts.iter().enumerate() {
        if !is_name(&a.name) {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("artifacts[{i}].name"),
                format!("`{}` is not a valid identifier", a.name),
            ));
        }
        if !names.insert(a.name.as_str()) {
            issues.push(ModelIssue::new(
                ModelIssueKind::DuplicateName,
                format!("artifacts[{i}].name"),
                format!("name `{}` declared twice", a.name),
            ));
        }
        artifacts.insert(a.name.as_str());
    }
    let mut placed: HashMap<&str, usize> = HashMap::new();
    for (i, p) in model.placements.iter().enumerate() {
        if !artifacts.contains(p.artifact.as_str()) {
            issues.push(ModelIssue::new(
                ModelIssueKind::DanglingEndpoint,
                format!("placements[{i}].artifact"),
                format!("artifact `{}` is not declared", p.artifact),
            ));
        }
        if !nodes.contains(p.node.as_str()) {
            issues.push(ModelIssue::new(
                ModelIssueKind::DanglingEndpoint,
                format!("placements[{i}].node"),
                format!("node `{}` is not declared", p.node),
            ));
        }
        *placed.entry(p.artifact.as_str()).or_default() += 1;
    }
    for (i, a) in model.artifacts.iter().enumerate() {
        let count = placed.get(a.name.as_str()).copied().unwrap_or(0);
        if count != 1 {
            issues.push(ModelIssue::new(
                ModelIssueKind::Invalid,
                format!("artifacts[{i}]"),
                format!(
                    "artifact `{}` must be placed on exactly one node, found {count}",
                    a.name
                ),
            ));
        }
    }
    for (i, path) in model.paths.iter().enumerate() {
        for (field, name) in [("from", &path.from), ("to", &path.to)] {
            if !nodes.contains(name.as_str()) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::DanglingEndpoint,
                    format!("paths[{i}].{field}"),
                    format!("node `{name}` is not declared"),
                ));
            }
        }
        if let Some(label) = &path.label {
            if !is_label(label) {
                issues.push(ModelIssue::new(
                    ModelIssueKind::Invalid,
                    format!("paths[{i}].label"),
                    "label must be a non-empty single trimmed line".to_string(),
                ));
            }
        }
    }
    issues
}
