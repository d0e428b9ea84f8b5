use std::collections::HashSet;

use super::RuleTable;
use crate::artifact::{
    validate_package, AsrTag, DesignPackage, MismatchKind, MismatchReport, ParticipantKind,
    RequirementKind, ViolationKind,
};

fn severity(
    rules: &RuleTable,
    kind: MismatchKind,
    requirement_kind: Option<RequirementKind>,
) -> u8 {
    rules
        .severity(kind, requirement_kind)
        .unwrap_or(match kind {
            MismatchKind::DanglingReference => 4,
            MismatchKind::UncoveredAsr => 3,
            _ => 2,
        })
}

fn report(
    kind: MismatchKind,
    key: &str,
    severity: u8,
    requirement_refs: Vec<String>,
    artifact_refs: Vec<String>,
    description: String,
) -> MismatchReport {
    MismatchReport {
        id: format!("{}:{key}", kind.as_str()),
        kind,
        severity,
        requirement_refs,
        artifact_refs,
        description,
        judged_stage: None,
    }
}

/// One `uncovered_asr` per ASR-tagged requirement without any traceability
/// link, in tag order.
pub fn check_traceability(
    asr_tags: &[AsrTag],
    pkg: &DesignPackage,
    rules: &RuleTable,
) -> Vec<MismatchReport> {
    let linked: HashSet<&str> = pkg
        .traceability_links
        .iter()
        .map(|l| l.requirement_id.as_str())
        .collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for tag in asr_tags {
        let id = tag.requirement_id.as_str();
        if !seen.insert(id) || linked.contains(id) {
            continue;
        }
        let kind = pkg.requirement(id).map(|r| r.kind);
        out.push(report(
            MismatchKind::UncoveredAsr,
            id,
            severity(rules, MismatchKind::UncoveredAsr, kind),
            vec![id.to_string()],
            Vec::new(),
            format!("architecture-significant requirement {id} has no traceability link"),
        ));
    }
    out
}

/// Cross-model checks: sequence participants against classes, deployment
/// artifacts against the logical view, component allocation, and any
/// dangling reference that slipped past integrity validation.
pub fn check_consistency(pkg: &DesignPackage, rules: &RuleTable) -> Vec<MismatchReport> {
    let mut out = Vec::new();
    let inconsistency = severity(rules, MismatchKind::DiagramInconsistency, None);

    let classes: HashSet<&str> = pkg
        .class_model
        .classes
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    for (i, model) in pkg.sequence_models.iter().enumerate() {
        for p in &model.participants {
            if p.kind == ParticipantKind::Actor || classes.contains(p.name.as_str()) {
                continue;
            }
            let path = format!("sequence_models/{i}/participants/{}", p.name);
            out.push(report(
                MismatchKind::DiagramInconsistency,
                &path,
                inconsistency,
                Vec::new(),
                vec![path.clone()],
                format!(
                    "sequence participant {} is neither a class nor an actor",
                    p.name
                ),
            ));
        }
    }

    let components: HashSet<&str> = pkg
        .logical_view
        .components
        .iter()
        .map(|c| c.id.as_str())
        .collect();
    for artifact in &pkg.deployment_model.artifacts {
        if components.contains(artifact.realizes.as_str()) {
            continue;
        }
        let path = format!("deployment_model/artifacts/{}", artifact.name);
        out.push(report(
            MismatchKind::DiagramInconsistency,
            &path,
            inconsistency,
            Vec::new(),
            vec![path.clone()],
            format!(
                "deployment artifact {} realizes unknown component `{}`",
                artifact.name, artifact.realizes
            ),
        ));
    }

    let allocated: HashSet<&str> = pkg
        .physical_view
        .allocations
        .iter()
        .map(|a| a.component_id.as_str())
        .collect();
    let unallocated = severity(rules, MismatchKind::UnallocatedComponent, None);
    for c in &pkg.logical_view.components {
        if allocated.contains(c.id.as_str()) {
            continue;
        }
        let path = format!("logical_view/components/{}", c.id);
        out.push(report(
            MismatchKind::UnallocatedComponent,
            &path,
            unallocated,
            Vec::new(),
            vec![path.clone()],
            format!("logical component {} is not allocated to any node", c.id),
        ));
    }

    let dangling = severity(rules, MismatchKind::DanglingReference, None);
    for v in validate_package(pkg) {
        if v.kind != ViolationKind::DanglingReference {
            continue;
        }
        out.push(report(
            MismatchKind::DanglingReference,
            &v.path,
            dangling,
            Vec::new(),
            vec![v.path.clone()],
            format!("dangling reference at {}: {}", v.path, v.message),
        ));
    }
    out
}
