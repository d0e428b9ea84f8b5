use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::journal::{EventKind, JournalEvent};
use super::OrchestratorError;
use crate::agent::{apply_artifacts, AgentArtifacts};
use crate::artifact::{
    canonical_bytes, sha256_hex, ClarificationStatus, DesignPackage, MismatchReport,
    PackageVerdict, RefinementSuggestion, RootCause, Stage,
};
use crate::evaluator::Decision;
use crate::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Init,
    Analysis,
    AwaitClarification,
    Modeling,
    Design,
    Evaluation,
    RefineAnalysis,
    RefineModeling,
    RefineDesign,
    Confirmed,
    Aborted,
}

impl Phase {
    pub const ALL: [Phase; 11] = [
        Phase::Init,
        Phase::Analysis,
        Phase::AwaitClarification,
        Phase::Modeling,
        Phase::Design,
        Phase::Evaluation,
        Phase::RefineAnalysis,
        Phase::RefineModeling,
        Phase::RefineDesign,
        Phase::Confirmed,
        Phase::Aborted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "INIT",
            Phase::Analysis => "ANALYSIS",
            Phase::AwaitClarification => "AWAIT_CLARIFICATION",
            Phase::Modeling => "MODELING",
            Phase::Design => "DESIGN",
            Phase::Evaluation => "EVALUATION",
            Phase::RefineAnalysis => "REFINE_ANALYSIS",
            Phase::RefineModeling => "REFINE_MODELING",
            Phase::RefineDesign => "REFINE_DESIGN",
            Phase::Confirmed => "CONFIRMED",
            Phase::Aborted => "ABORTED",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Confirmed | Phase::Aborted)
    }

    pub fn refine(stage: Stage) -> Phase {
        match stage {
            Stage::Analysis => Phase::RefineAnalysis,
            Stage::Modeling => Phase::RefineModeling,
            Stage::Design => Phase::RefineDesign,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendSelector {
    #[default]
    Replay,
    Remote,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub max_rounds: u32,
    pub severity_threshold: u8,
    pub interactive: bool,
    pub backend: BackendSelector,
    pub top_k: usize,
    /// Answers applied automatically by `run_to_completion`, by question id.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub preseeded_answers: BTreeMap<String, String>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_rounds: 5,
            severity_threshold: 2,
            interactive: false,
            backend: BackendSelector::Replay,
            top_k: crate::kb::DEFAULT_TOP_K,
            preseeded_answers: BTreeMap::new(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.max_rounds < 1 {
            return Err(OrchestratorError::InvalidConfig(
                "max_rounds must be at least 1".into(),
            ));
        }
        if !(1..=4).contains(&self.severity_threshold) {
            return Err(OrchestratorError::InvalidConfig(
                "severity_threshold must be in [1, 4]".into(),
            ));
        }
        if self.top_k < 1 {
            return Err(OrchestratorError::InvalidConfig(
                "top_k must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything derivable from the journal. Mutated only by [`SessionState::apply`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub phase: Phase,
    pub round_count: u32,
    pub package: DesignPackage,
    pub open_mismatches: Vec<MismatchReport>,
    pub config: SessionConfig,
    pub srs_text: String,
    /// Latest evaluation's findings.
    pub mismatches: Vec<MismatchReport>,
    pub root_causes: Vec<RootCause>,
    pub refinements: Vec<RefinementSuggestion>,
    /// Suggestions the next producing tasks act on, filtered by stage.
    pub pending_refinements: Vec<RefinementSuggestion>,
    /// Latest grounding trace per role.
    pub grounding: BTreeMap<Role, Vec<String>>,
    pub agent_tasks: u32,
    pub evaluations: u32,
    pub stakeholder_rejections: u32,
    /// Set once all questions are answered; the next analyst pass is a
    /// clarified re-run.
    pub answers_received: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_cause: Option<String>,
    pub last_seq: u64,
}

impl SessionState {
    fn started(session_id: &str, srs_text: &str, config: &SessionConfig) -> Self {
        SessionState {
            session_id: session_id.to_string(),
            phase: Phase::Analysis,
            round_count: 0,
            package: DesignPackage::default(),
            open_mismatches: Vec::new(),
            config: config.clone(),
            srs_text: srs_text.to_string(),
            mismatches: Vec::new(),
            root_causes: Vec::new(),
            refinements: Vec::new(),
            pending_refinements: Vec::new(),
            grounding: BTreeMap::new(),
            agent_tasks: 0,
            evaluations: 0,
            stakeholder_rejections: 0,
            answers_received: false,
            abort_cause: None,
            last_seq: 0,
        }
    }

    /// Folds one event. The first event must be `SessionStarted` (`state` is
    /// `None` only then); sequence numbers must be gap-free.
    pub fn apply(
        state: Option<SessionState>,
        event: &JournalEvent,
    ) -> Result<SessionState, OrchestratorError> {
        let corrupt = |msg: String| OrchestratorError::CorruptJournal(msg);
        let mut s = match (state, &event.event) {
            (
                None,
                EventKind::SessionStarted {
                    session_id,
                    srs_text,
                    config,
                },
            ) => {
                if event.seq != 1 {
                    return Err(corrupt(format!("first event has seq {}", event.seq)));
                }
                let mut s = SessionState::started(session_id, srs_text, config);
                s.last_seq = 1;
                return Ok(s);
            }
            (None, other) => {
                return Err(corrupt(format!(
                    "first event is {}, not SessionStarted",
                    other.name()
                )))
            }
            (Some(_), EventKind::SessionStarted { .. }) => {
                return Err(corrupt(format!(
                    "seq {}: SessionStarted after the first event",
                    event.seq
                )))
            }
            (Some(s), _) => s,
        };
        if event.seq != s.last_seq + 1 {
            return Err(corrupt(format!(
                "expected seq {}, found {}",
                s.last_seq + 1,
                event.seq
            )));
        }
        s.last_seq = event.seq;

        match &event.event {
            EventKind::SessionStarted { .. } => unreachable!("handled above"),
            EventKind::AgentTaskStarted { .. } => s.agent_tasks += 1,
            EventKind::AgentTaskCompleted {
                role,
                artifacts,
                grounding_trace,
                ..
            } => {
                s.grounding.insert(*role, grounding_trace.clone());
                match artifacts {
                    AgentArtifacts::Evaluation { .. } => {}
                    _ => {
                        apply_artifacts(&mut s.package, artifacts);
                        if let Some(stage) = role.stage() {
                            s.pending_refinements.retain(|r| r.target_stage != stage);
                        }
                    }
                }
                s.phase = match role {
                    Role::Analyst => {
                        s.answers_received = false;
                        if s.package.pending_clarifications().next().is_some() {
                            Phase::AwaitClarification
                        } else {
                            Phase::Modeling
                        }
                    }
                    Role::Modeler => Phase::Design,
                    Role::Designer => Phase::Evaluation,
                    Role::Evaluator => s.phase,
                };
            }
            EventKind::ClarificationAsked { .. } => {}
            EventKind::ClarificationAnswered {
                question_id,
                answer,
            } => {
                let exchange = s
                    .package
                    .clarifications
                    .iter_mut()
                    .find(|c| &c.question_id == question_id)
                    .ok_or_else(|| {
                        corrupt(format!("seq {}: unknown question {question_id}", event.seq))
                    })?;
                exchange.answer = Some(answer.clone());
                exchange.status = ClarificationStatus::Answered;
                if s.package.pending_clarifications().next().is_none() {
                    s.phase = Phase::Analysis;
                    s.answers_received = true;
                }
            }
            EventKind::EvaluationCompleted {
                round,
                mismatches,
                root_causes,
                refinements,
                verdict,
            } => {
                s.evaluations += 1;
                s.round_count = *round;
                s.package.round_count = *round;
                s.mismatches = mismatches.clone();
                s.root_causes = root_causes.clone();
                s.refinements = refinements.clone();
                s.open_mismatches = verdict.open_mismatches.clone();
                match (verdict.decision, verdict.routed_stage) {
                    (Decision::Confirmed, _) => {
                        s.phase = Phase::Confirmed;
                        s.package.verdict = PackageVerdict::Confirmed;
                    }
                    (Decision::Refine, _) if *round >= s.config.max_rounds => {
                        s.phase = Phase::Aborted;
                        s.package.verdict = PackageVerdict::Aborted;
                    }
                    (Decision::Refine, stage) => {
                        s.phase = Phase::refine(stage.unwrap_or(Stage::Design));
                        let open: Vec<&str> = verdict
                            .open_mismatches
                            .iter()
                            .map(|m| m.id.as_str())
                            .collect();
                        s.pending_refinements = refinements
                            .iter()
                            .filter(|r| open.contains(&r.mismatch_id.as_str()))
                            .cloned()
                            .collect();
                    }
                }
            }
            EventKind::RefinementRouted {
                stage,
                origin,
                refinements,
            } => {
                if *origin == super::RefinementOrigin::Stakeholder {
                    s.stakeholder_rejections += 1;
                    s.package.verdict = PackageVerdict::Unconfirmed;
                    s.pending_refinements = refinements.clone();
                }
                s.phase = Phase::refine(*stage);
            }
            EventKind::SessionConfirmed { round_count, .. } => {
                s.phase = Phase::Confirmed;
                s.round_count = *round_count;
                s.package.verdict = PackageVerdict::Confirmed;
            }
            EventKind::SessionAborted { cause } => {
                s.phase = Phase::Aborted;
                s.package.verdict = PackageVerdict::Aborted;
                s.abort_cause = Some(cause.clone());
            }
        }
        Ok(s)
    }

    /// Directives addressed to `role`'s stage by the latest routing.
    pub fn directives_for(&self, role: Role) -> Vec<String> {
        let Some(stage) = role.stage() else {
            return Vec::new();
        };
        self.pending_refinements
            .iter()
            .filter(|r| r.target_stage == stage)
            .map(|r| r.directive.clone())
            .collect()
    }

    /// sha256 over the canonical JSON of the whole state.
    pub fn digest(&self) -> String {
        sha256_hex(&canonical_bytes(self))
    }
}

/// Rebuilds a session's state from journal lines without calling any backend.
pub fn replay<I, S>(lines: I) -> Result<SessionState, OrchestratorError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut state = None;
    for (i, line) in lines.into_iter().enumerate() {
        let line = line.as_ref().trim();
        if line.is_empty() {
            continue;
        }
        let event: JournalEvent = serde_json::from_str(line)
            .map_err(|e| OrchestratorError::CorruptJournal(format!("line {}: {e}", i + 1)))?;
        state = Some(SessionState::apply(state, &event)?);
    }
    state.ok_or(OrchestratorError::EmptyJournal)
}
