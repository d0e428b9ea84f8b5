//! Deterministic verification of a design package: traceability coverage,
//! cross-diagram consistency, root-cause attribution and the verdict.
//!
//! Severities and stage attribution come from a rule table shipped as data
//! (`config/evaluation_rules.json`), so they can be audited or overridden
//! without a rebuild.

mod checks;
mod rules;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{
    DesignPackage, MismatchKind, MismatchReport, RefinementSuggestion, RootCause, Stage,
};

pub use checks::{check_consistency, check_traceability};
pub use rules::{Rule, RuleTable};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no rule for mismatch kind `{0}`")]
    UnknownKind(String),
    #[error("invalid rule table: {0}")]
    InvalidRules(String),
    #[error("severity threshold {0} outside [1, 4]")]
    InvalidThreshold(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Confirmed,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routed_stage: Option<Stage>,
    pub open_mismatches: Vec<MismatchReport>,
}

/// Maps a mismatch to the stage responsible for it.
///
/// Uncovered ASRs go to modeling for non-functional requirements and to
/// design for functional ones; judged mismatches use the stage the Evaluator
/// agent named, else the table's default.
pub fn attribute_root_cause(
    mismatch: &MismatchReport,
    pkg: &DesignPackage,
    rules: &RuleTable,
) -> Result<RootCause, EvalError> {
    let requirement_kind = match mismatch.kind {
        MismatchKind::UncoveredAsr => mismatch
            .requirement_refs
            .first()
            .and_then(|id| pkg.requirement(id))
            .map(|r| r.kind),
        _ => None,
    };
    let rule = rules
        .lookup(mismatch.kind, requirement_kind)
        .ok_or_else(|| EvalError::UnknownKind(mismatch.kind.as_str().to_string()))?;
    let (stage, explanation) = match mismatch.kind {
        MismatchKind::Judged => match mismatch.judged_stage {
            Some(stage) => (
                stage,
                format!("Evaluator attributed the mismatch to {}", stage.as_str()),
            ),
            None => (
                rule.stage,
                format!("no stage given; defaulting to {}", rule.stage.as_str()),
            ),
        },
        MismatchKind::UncoveredAsr => (
            rule.stage,
            match requirement_kind {
                Some(kind) => format!(
                    "{} requirement is not addressed by any decision, view or diagram element",
                    kind.as_str()
                ),
                None => "requirement is not addressed by any element".to_string(),
            },
        ),
        MismatchKind::DiagramInconsistency => (
            rule.stage,
            "diagrams disagree with each other or with the views".to_string(),
        ),
        MismatchKind::UnallocatedComponent => (
            rule.stage,
            "logical component has no resource allocation".to_string(),
        ),
        MismatchKind::DanglingReference => (
            rule.stage,
            "artifact references an element that does not exist".to_string(),
        ),
    };
    Ok(RootCause {
        mismatch_id: mismatch.id.clone(),
        stage,
        explanation,
    })
}

/// Actionable directive for the stage a mismatch was attributed to.
pub fn refinement_for(
    mismatch: &MismatchReport,
    cause: &RootCause,
    directive: Option<&str>,
) -> RefinementSuggestion {
    let directive = match (directive, mismatch.kind) {
        (Some(d), _) if !d.trim().is_empty() => d.to_string(),
        (_, MismatchKind::UncoveredAsr) => format!(
            "Address requirement {} with an explicit element and record a traceability link to it.",
            mismatch.requirement_refs.join(", ")
        ),
        (_, MismatchKind::DiagramInconsistency) => format!(
            "Make {} consistent with the class model and logical view.",
            mismatch.artifact_refs.join(", ")
        ),
        (_, MismatchKind::UnallocatedComponent) => format!(
            "Allocate {} to at least one physical node.",
            mismatch.artifact_refs.join(", ")
        ),
        (_, MismatchKind::DanglingReference) => format!(
            "Remove or repair the reference at {}.",
            mismatch.artifact_refs.join(", ")
        ),
        (_, MismatchKind::Judged) => format!("Resolve: {}", mismatch.description),
    };
    RefinementSuggestion {
        mismatch_id: mismatch.id.clone(),
        target_stage: cause.stage,
        directive,
    }
}

/// Confirms iff no mismatch reaches `threshold`; otherwise routes to the
/// earliest stage among the open mismatches' causes.
pub fn decide_verdict(
    mismatches: &[(MismatchReport, RootCause)],
    threshold: u8,
) -> Result<Verdict, EvalError> {
    if !(1..=4).contains(&threshold) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    let open: Vec<&(MismatchReport, RootCause)> = mismatches
        .iter()
        .filter(|(m, _)| m.severity >= threshold)
        .collect();
    if open.is_empty() {
        return Ok(Verdict {
            decision: Decision::Confirmed,
            routed_stage: None,
            open_mismatches: Vec::new(),
        });
    }
    let stage = open.iter().map(|(_, c)| c.stage).min();
    Ok(Verdict {
        decision: Decision::Refine,
        routed_stage: stage,
        open_mismatches: open.into_iter().map(|(m, _)| m.clone()).collect(),
    })
}

/// Drops judged mismatches whose description repeats a structural finding.
pub fn merge_judged(
    structural: Vec<MismatchReport>,
    judged: Vec<MismatchReport>,
) -> Vec<MismatchReport> {
    let seen: HashSet<String> = structural
        .iter()
        .map(|m| m.description.trim().to_string())
        .collect();
    let mut merged = structural;
    merged.extend(
        judged
            .into_iter()
            .filter(|m| !seen.contains(m.description.trim())),
    );
    merged
}

/// Full result of one evaluation round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assessment {
    pub mismatches: Vec<MismatchReport>,
    pub root_causes: Vec<RootCause>,
    pub refinements: Vec<RefinementSuggestion>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default)]
pub struct Evaluator {
    pub rules: RuleTable,
}

impl Evaluator {
    pub fn new(rules: RuleTable) -> Self {
        Evaluator { rules }
    }

    /// Deterministic checks only: traceability then consistency.
    pub fn structural(&self, pkg: &DesignPackage) -> Vec<MismatchReport> {
        let mut out = check_traceability(&pkg.asr_tags, pkg, &self.rules);
        out.extend(check_consistency(pkg, &self.rules));
        out
    }

    /// Merges structural and judged mismatches, attributes causes and decides.
    /// `directives` pairs judged mismatch ids with the agent's suggestion.
    pub fn assess(
        &self,
        pkg: &DesignPackage,
        judged: Vec<MismatchReport>,
        directives: &[(String, String)],
        threshold: u8,
    ) -> Result<Assessment, EvalError> {
        let mismatches = merge_judged(self.structural(pkg), judged);
        let mut pairs = Vec::with_capacity(mismatches.len());
        let mut refinements = Vec::with_capacity(mismatches.len());
        for m in &mismatches {
            let cause = attribute_root_cause(m, pkg, &self.rules)?;
            let directive = directives
                .iter()
                .find(|(id, _)| *id == m.id)
                .map(|(_, d)| d.as_str());
            refinements.push(refinement_for(m, &cause, directive));
            pairs.push((m.clone(), cause));
        }
        let verdict = decide_verdict(&pairs, threshold)?;
        Ok(Assessment {
            mismatches,
            root_causes: pairs.into_iter().map(|(_, c)| c).collect(),
            refinements,
            verdict,
        })
    }
}
