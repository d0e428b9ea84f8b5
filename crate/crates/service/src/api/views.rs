//! Read models served by the API.

use serde::Serialize;
use serde_json::{json, Value};

use maad_core::artifact::{ClarificationExchange, PackageVerdict};
use maad_core::dsl::{emit_class, emit_deployment, emit_sequence};
use maad_core::orchestrator::{Phase, SessionState};

use super::sessions::StakeholderVerdict;
use super::ApiError;

pub const ARTIFACT_KINDS: [&str; 6] = [
    "requirements",
    "adrs",
    "views",
    "diagrams",
    "mismatches",
    "package",
];

#[derive(Debug, Clone, Serialize)]
pub struct PendingQuestion {
    pub question_id: String,
    pub risk_id: String,
    pub question: String,
}

impl From<&ClarificationExchange> for PendingQuestion {
    fn from(c: &ClarificationExchange) -> Self {
        PendingQuestion {
            question_id: c.question_id.clone(),
            risk_id: c.risk_id.clone(),
            question: c.question.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub session_id: String,
    pub phase: Phase,
    pub round: u32,
    pub max_rounds: u32,
    pub verdict: PackageVerdict,
    pub stakeholder_verdict: Option<StakeholderVerdict>,
    pub pending_clarifications: Vec<PendingQuestion>,
    pub artifacts: Vec<&'static str>,
    pub open_mismatches: usize,
    pub last_seq: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_cause: Option<String>,
}

/// Artifact kinds with content so far; `package` is always listed.
pub fn inventory(s: &SessionState) -> Vec<&'static str> {
    let p = &s.package;
    let has = |kind: &str| match kind {
        "requirements" => !p.requirement_set.requirements.is_empty(),
        "adrs" => !p.adrs.is_empty(),
        "views" => !p.logical_view.components.is_empty(),
        "diagrams" => !p.sequence_models.is_empty(),
        "mismatches" => s.evaluations > 0,
        _ => true,
    };
    ARTIFACT_KINDS.into_iter().filter(|k| has(k)).collect()
}

pub fn snapshot(s: &SessionState, stakeholder_verdict: Option<StakeholderVerdict>) -> Snapshot {
    Snapshot {
        session_id: s.session_id.clone(),
        phase: s.phase,
        round: s.round_count,
        max_rounds: s.config.max_rounds,
        verdict: s.package.verdict,
        stakeholder_verdict,
        pending_clarifications: s
            .package
            .pending_clarifications()
            .map(PendingQuestion::from)
            .collect(),
        artifacts: inventory(s),
        open_mismatches: s.open_mismatches.len(),
        last_seq: s.last_seq,
        abort_cause: s.abort_cause.clone(),
    }
}

/// JSON for one artifact kind. `package` is served separately as canonical
/// bytes.
pub fn artifact(s: &SessionState, kind: &str) -> Result<Value, ApiError> {
    if !ARTIFACT_KINDS.contains(&kind) {
        return Err(ApiError::validation(
            "UnknownArtifactKind",
            format!(
                "unknown artifact kind `{kind}`; expected one of {}",
                ARTIFACT_KINDS.join(", ")
            ),
        ));
    }
    if !inventory(s).contains(&kind) {
        return Err(ApiError::invalid_state(format!(
            "`{kind}` is not available in phase {}",
            s.phase
        )));
    }
    let p = &s.package;
    Ok(match kind {
        "requirements" => json!({
            "requirement_set": p.requirement_set,
            "asr_tags": p.asr_tags,
            "risk_flags": p.risk_flags,
            "clarifications": p.clarifications,
        }),
        "adrs" => json!({ "qa_priorities": p.qa_priorities, "adrs": p.adrs }),
        "views" => json!({ "logical_view": p.logical_view, "physical_view": p.physical_view }),
        "diagrams" => json!({
            "class_diagram": emit_class(&p.class_model),
            "sequence_diagrams": p.sequence_models.iter().map(emit_sequence).collect::<Vec<_>>(),
            "deployment_diagram": emit_deployment(&p.deployment_model),
            "class_model": p.class_model,
            "sequence_models": p.sequence_models,
            "deployment_model": p.deployment_model,
        }),
        "mismatches" => json!({
            "round": s.round_count,
            "mismatches": s.mismatches,
            "root_causes": s.root_causes,
            "refinements": s.refinements,
            "open_mismatches": s.open_mismatches,
        }),
        _ => serde_json::to_value(p).map_err(|e| ApiError::internal(e.to_string()))?,
    })
}
