use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::types::*;
use crate::dsl::{
    check_class_model, check_deployment_model, check_sequence_model, ModelIssue, ModelIssueKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DanglingReference,
    DuplicateId,
    InvariantBroken,
}

/// One referential-integrity or type-invariant failure. `path` is a field
/// path such as `adrs[0].addresses[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityViolation {
    pub kind: ViolationKind,
    pub path: String,
    pub message: String,
}

struct Collector {
    out: Vec<IntegrityViolation>,
}

impl Collector {
    fn push(&mut self, kind: ViolationKind, path: String, message: impl Into<String>) {
        self.out.push(IntegrityViolation {
            kind,
            path,
            message: message.into(),
        });
    }

    fn dangling(&mut self, path: String, what: &str, id: &str) {
        self.push(
            ViolationKind::DanglingReference,
            path,
            format!("{what} `{id}` does not exist"),
        );
    }

    fn duplicate(&mut self, path: String, id: &str) {
        self.push(
            ViolationKind::DuplicateId,
            path,
            format!("`{id}` is not unique"),
        );
    }

    fn broken(&mut self, path: String, message: impl Into<String>) {
        self.push(ViolationKind::InvariantBroken, path, message);
    }

    fn model_issues(&mut self, prefix: &str, issues: Vec<ModelIssue>) {
        for issue in issues {
            let kind = match issue.kind {
                ModelIssueKind::DuplicateName => ViolationKind::DuplicateId,
                ModelIssueKind::DanglingEndpoint => ViolationKind::DanglingReference,
                ModelIssueKind::Invalid => ViolationKind::InvariantBroken,
            };
            self.push(kind, format!("{prefix}.{}", issue.path), issue.message);
        }
    }
}

/// Checks every cross-reference and type invariant of a package.
///
/// Returns an empty list iff the package is internally consistent. Violations
/// are reported in document order. Cross-model alignment (a sequence
/// participant without a class, a component without an allocation, an
/// artifact realizing an unknown component) is not an integrity failure; the
/// evaluator reports those as mismatches.
pub fn validate_package(pkg: &DesignPackage) -> Vec<IntegrityViolation> {
    let mut c = Collector { out: Vec::new() };

    let reqs = &pkg.requirement_set;
    let mut req_ids = HashSet::new();
    for (i, r) in reqs.requirements.iter().enumerate() {
        let path = format!("requirement_set.requirements[{i}]");
        if r.id.trim().is_empty() {
            c.broken(format!("{path}.id"), "requirement id is empty");
        } else if !req_ids.insert(r.id.as_str()) {
            c.duplicate(format!("{path}.id"), &r.id);
        }
        let (start, end) = r.source_span;
        if start > end || end > reqs.srs_length {
            c.broken(
                format!("{path}.source_span"),
                format!(
                    "span [{start}, {end}) outside SRS of length {}",
                    reqs.srs_length
                ),
            );
        }
        if r.kind == RequirementKind::Functional && !r.attributes.is_empty() {
            c.broken(
                format!("{path}.attributes"),
                "functional requirement carries quality attributes",
            );
        }
    }

    let mut tagged = HashSet::new();
    for (i, tag) in pkg.asr_tags.iter().enumerate() {
        let path = format!("asr_tags[{i}]");
        if !req_ids.contains(tag.requirement_id.as_str()) {
            c.dangling(
                format!("{path}.requirement_id"),
                "requirement",
                &tag.requirement_id,
            );
        } else if !tagged.insert(tag.requirement_id.as_str()) {
            c.duplicate(format!("{path}.requirement_id"), &tag.requirement_id);
        }
        if !(1..=4).contains(&tag.criticality) {
            c.broken(
                format!("{path}.criticality"),
                format!("criticality {} outside [1, 4]", tag.criticality),
            );
        }
    }

    let mut risk_ids = HashSet::new();
    for (i, risk) in pkg.risk_flags.iter().enumerate() {
        let path = format!("risk_flags[{i}]");
        if !risk_ids.insert(risk.id.as_str()) {
            c.duplicate(format!("{path}.id"), &risk.id);
        }
        if risk.affected_requirement_ids.is_empty() {
            c.broken(
                format!("{path}.affected_requirement_ids"),
                "risk affects no requirement",
            );
        }
        for (j, id) in risk.affected_requirement_ids.iter().enumerate() {
            if !req_ids.contains(id.as_str()) {
                c.dangling(
                    format!("{path}.affected_requirement_ids[{j}]"),
                    "requirement",
                    id,
                );
            }
        }
        let has_assumption = risk
            .assumption
            .as_deref()
            .is_some_and(|a| !a.trim().is_empty());
        if risk.resolution == Resolution::Assumed && !has_assumption {
            c.broken(
                format!("{path}.assumption"),
                "assumed resolution requires assumption text",
            );
        }
    }

    let mut question_ids = HashSet::new();
    for (i, q) in pkg.clarifications.iter().enumerate() {
        let path = format!("clarifications[{i}]");
        if !question_ids.insert(q.question_id.as_str()) {
            c.duplicate(format!("{path}.question_id"), &q.question_id);
        }
        if !risk_ids.contains(q.risk_id.as_str()) {
            c.dangling(format!("{path}.risk_id"), "risk", &q.risk_id);
        }
        let answered = q.status == ClarificationStatus::Answered;
        if answered != q.answer.is_some() {
            c.broken(
                format!("{path}.status"),
                "status must be answered iff an answer is present",
            );
        }
    }

    let mut ranks = HashSet::new();
    let mut attributes = HashSet::new();
    let n = pkg.qa_priorities.len() as u32;
    for (i, p) in pkg.qa_priorities.iter().enumerate() {
        let path = format!("qa_priorities[{i}]");
        if !attributes.insert(p.attribute) {
            c.duplicate(format!("{path}.attribute"), &format!("{:?}", p.attribute));
        }
        if p.rank < 1 || p.rank > n || !ranks.insert(p.rank) {
            c.broken(
                format!("{path}.rank"),
                format!("ranks must be a permutation of 1..={n}"),
            );
        }
    }

    let mut adr_ids = HashSet::new();
    for (i, adr) in pkg.adrs.iter().enumerate() {
        let path = format!("adrs[{i}]");
        if !adr_ids.insert(adr.id.as_str()) {
            c.duplicate(format!("{path}.id"), &adr.id);
        }
        if adr.addresses.is_empty() {
            c.broken(
                format!("{path}.addresses"),
                "decision addresses no requirement",
            );
        }
        for (j, id) in adr.addresses.iter().enumerate() {
            if !req_ids.contains(id.as_str()) {
                c.dangling(format!("{path}.addresses[{j}]"), "requirement", id);
            }
        }
    }

    let mut component_ids = HashSet::new();
    for (i, comp) in pkg.logical_view.components.iter().enumerate() {
        if !component_ids.insert(comp.id.as_str()) {
            c.duplicate(format!("logical_view.components[{i}].id"), &comp.id);
        }
    }
    for (i, rel) in pkg.logical_view.relations.iter().enumerate() {
        let path = format!("logical_view.relations[{i}]");
        for (field, id) in [("from_id", &rel.from_id), ("to_id", &rel.to_id)] {
            if !component_ids.contains(id.as_str()) {
                c.dangling(format!("{path}.{field}"), "component", id);
            }
        }
        if rel.kind == LogicalRelationKind::Contains && rel.from_id == rel.to_id {
            c.broken(path, "component cannot contain itself");
        }
    }

    let mut node_ids = HashSet::new();
    for (i, node) in pkg.physical_view.nodes.iter().enumerate() {
        if !node_ids.insert(node.id.as_str()) {
            c.duplicate(format!("physical_view.nodes[{i}].id"), &node.id);
        }
    }
    for (i, alloc) in pkg.physical_view.allocations.iter().enumerate() {
        let path = format!("physical_view.allocations[{i}]");
        if !component_ids.contains(alloc.component_id.as_str()) {
            c.dangling(
                format!("{path}.component_id"),
                "component",
                &alloc.component_id,
            );
        }
        if !node_ids.contains(alloc.node_id.as_str()) {
            c.dangling(format!("{path}.node_id"), "node", &alloc.node_id);
        }
    }
    for (i, link) in pkg.physical_view.links.iter().enumerate() {
        let path = format!("physical_view.links[{i}]");
        for (field, id) in [("node_a", &link.node_a), ("node_b", &link.node_b)] {
            if !node_ids.contains(id.as_str()) {
                c.dangling(format!("{path}.{field}"), "node", id);
            }
        }
    }

    c.model_issues("class_model", check_class_model(&pkg.class_model));

    if pkg.verdict == PackageVerdict::Confirmed && pkg.sequence_models.is_empty() {
        c.broken(
            "sequence_models".to_string(),
            "a confirmed package needs at least one sequence model",
        );
    }
    for (i, model) in pkg.sequence_models.iter().enumerate() {
        c.model_issues(
            &format!("sequence_models[{i}]"),
            check_sequence_model(model),
        );
    }

    c.model_issues(
        "deployment_model",
        check_deployment_model(&pkg.deployment_model),
    );

    for (i, link) in pkg.traceability_links.iter().enumerate() {
        let path = format!("traceability_links[{i}]");
        if !req_ids.contains(link.requirement_id.as_str()) {
            c.dangling(
                format!("{path}.requirement_id"),
                "requirement",
                &link.requirement_id,
            );
        }
        if !pkg.resolve_element(&link.element) {
            c.dangling(format!("{path}.element"), "element", &link.element);
        }
    }

    c.out
}
