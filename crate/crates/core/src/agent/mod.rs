//! Agent runtime: prompt assembly from role templates and retrieved
//! knowledge, backend invocation, and a bounded parse/repair loop.

mod backend;
mod output;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::artifact::{element_stage, DesignPackage, Stage};
use crate::kb::{KbError, KnowledgeChunk, KnowledgeIndex};
use crate::Role;

pub use backend::{
    AdversarialBackend, BackendError, CompletionBackend, CompletionParams, RemoteBackend,
    ReplayBackend, DEFAULT_REMOTE_MODEL,
};
pub use output::{
    apply_artifacts, extract_fenced, validate_output, AgentArtifacts, AnalystOutput,
    DesignerOutput, EvaluatorOutput, JudgedDirective, JudgedMismatch, ModelerOutput, QuestionDraft,
    Validated, ValidationContext,
};
pub use template::{Placeholder, Template, TemplateSet, Values};

/// Re-asks after the first reply; a task makes at most `1 + MAX_REPAIRS` calls.
pub const MAX_REPAIRS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// First pass of a role in a session.
    Initial,
    /// Analyst re-run after stakeholder answers.
    Clarified,
    /// Re-run routed by an evaluation or a stakeholder rejection.
    Refine,
    Evaluate,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Initial => "initial",
            TaskKind::Clarified => "clarified",
            TaskKind::Refine => "refine",
            TaskKind::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            TaskKind::Initial,
            TaskKind::Clarified,
            TaskKind::Refine,
            TaskKind::Evaluate,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| format!("unknown task kind `{s}`"))
    }
}

/// Identifies one backend call. Replay files are keyed by role, round and task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskKey {
    pub role: Role,
    pub round: u32,
    pub task: TaskKind,
    pub attempt: u32,
}

impl TaskKey {
    pub fn file_stem(&self) -> String {
        format!("{}_{}_{}", self.role, self.round, self.task)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
    /// Chunk ids in inclusion order; each appears as `[K:<id>]` in `user`.
    pub knowledge_citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedAttempt {
    pub raw: String,
    pub errors: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{role} template: {message}")]
    Template { role: Role, message: String },
    #[error("{role} prompt needs `{placeholder}`, which the session does not have yet")]
    MissingInput { role: Role, placeholder: String },
    #[error("{role} backend unavailable: {message}")]
    BackendUnavailable { role: Role, message: String },
    #[error("{role} output invalid after {} attempts; last errors: {}", attempts.len(), attempts.last().map(|a| a.errors.join("; ")).unwrap_or_default())]
    AgentOutputInvalid {
        role: Role,
        attempts: Vec<FailedAttempt>,
    },
    #[error("knowledge retrieval failed: {0}")]
    Knowledge(#[from] KbError),
}

/// Everything a task reads from the session.
#[derive(Debug, Clone, Copy)]
pub struct TaskInput<'a> {
    pub role: Role,
    pub task: TaskKind,
    /// 1-based; the round the task's output will be evaluated in.
    pub round: u32,
    pub srs: &'a str,
    pub package: &'a DesignPackage,
    pub directives: &'a [String],
    pub interactive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub artifacts: AgentArtifacts,
    /// Cited chunk ids; always a subset of the prompt's knowledge.
    pub grounding_trace: Vec<String>,
    pub attempts: u32,
}

const NON_INTERACTIVE_NOTE: &str =
    "Stakeholders are unavailable in this session. Ask no questions; record an assumption for every risk and mark it assumed.";

fn pretty(value: serde_json::Value) -> String {
    serde_json::to_string_pretty(&value).expect("json values serialize")
}

fn analysis_view(pkg: &DesignPackage) -> serde_json::Value {
    json!({
        "requirement_set": pkg.requirement_set,
        "asr_tags": pkg.asr_tags,
        "risk_flags": pkg.risk_flags,
        "clarifications": pkg.clarifications,
    })
}

fn prior_artifacts(role: Role, pkg: &DesignPackage) -> Option<String> {
    let analysed = !pkg.requirement_set.requirements.is_empty();
    match role {
        Role::Analyst | Role::Modeler => analysed.then(|| pretty(analysis_view(pkg))),
        Role::Designer => {
            if !analysed || pkg.logical_view.components.is_empty() {
                return None;
            }
            let mut view = analysis_view(pkg);
            let links: Vec<_> = pkg
                .traceability_links
                .iter()
                .filter(|l| element_stage(&l.element) == Some(Stage::Modeling))
                .collect();
            view["qa_priorities"] = json!(pkg.qa_priorities);
            view["adrs"] = json!(pkg.adrs);
            view["logical_view"] = json!(pkg.logical_view);
            view["physical_view"] = json!(pkg.physical_view);
            view["traceability_links"] = json!(links);
            Some(pretty(view))
        }
        Role::Evaluator => (!pkg.sequence_models.is_empty()).then(|| pretty(json!(pkg))),
    }
}

fn clarification_answers(input: &TaskInput<'_>) -> Option<String> {
    if !input.interactive {
        return Some(NON_INTERACTIVE_NOTE.to_string());
    }
    let answered: Vec<String> = input
        .package
        .clarifications
        .iter()
        .filter_map(|c| {
            c.answer.as_ref().map(|a| {
                format!(
                    "- {} (risk {}): {}\n  Answer: {}",
                    c.question_id, c.risk_id, c.question, a
                )
            })
        })
        .collect();
    (!answered.is_empty()).then(|| answered.join("\n"))
}

/// Builds the prompt for a task. Deterministic in its inputs; knowledge is
/// listed in the given rank order.
pub fn assemble_prompt(
    template: &Template,
    input: &TaskInput<'_>,
    retrieved: &[&KnowledgeChunk],
) -> Result<Prompt, AgentError> {
    let knowledge: Vec<String> = retrieved
        .iter()
        .map(|c| {
            format!(
                "[K:{}] {}",
                c.chunk_id,
                c.text.split_whitespace().collect::<Vec<_>>().join(" ")
            )
        })
        .collect();
    let directives = (input.task == TaskKind::Refine).then(|| {
        if input.directives.is_empty() {
            "(none)".to_string()
        } else {
            input
                .directives
                .iter()
                .map(|d| format!("- {d}"))
                .collect::<Vec<_>>()
                .join("\n")
        }
    });
    let srs = Some(input.srs.trim())
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    let mut values = Values::new();
    values.insert(Placeholder::Srs, srs);
    values.insert(
        Placeholder::PriorArtifacts,
        prior_artifacts(input.role, input.package),
    );
    values.insert(Placeholder::Knowledge, Some(knowledge.join("\n")));
    values.insert(Placeholder::RefinementDirectives, directives);
    values.insert(
        Placeholder::ClarificationAnswers,
        clarification_answers(input),
    );
    let (system, user) = template.render(&values)?;
    Ok(Prompt {
        system,
        user,
        knowledge_citations: retrieved.iter().map(|c| c.chunk_id.clone()).collect(),
    })
}

fn repair_prompt(base: &Prompt, errors: &[String]) -> Prompt {
    let mut user = base.user.clone();
    user.push_str("\n\n## Repair\nYour previous reply was rejected:\n");
    for e in errors {
        user.push_str("- ");
        user.push_str(e);
        user.push('\n');
    }
    user.push_str("Reply again with exactly one fenced JSON block.");
    Prompt {
        system: base.system.clone(),
        user,
        knowledge_citations: base.knowledge_citations.clone(),
    }
}

/// Templates, decoding parameters and retrieval depth shared by all tasks.
#[derive(Debug, Clone)]
pub struct AgentRuntime {
    pub templates: TemplateSet,
    pub params: CompletionParams,
    pub top_k: usize,
}

impl Default for AgentRuntime {
    fn default() -> Self {
        AgentRuntime {
            templates: TemplateSet::default(),
            params: CompletionParams::default(),
            top_k: crate::kb::DEFAULT_TOP_K,
        }
    }
}

impl AgentRuntime {
    /// Top-k chunks for the role. The query is the SRS, so a role sees the
    /// same knowledge in every round of a session.
    pub fn retrieve<'k>(
        &self,
        kb: &'k KnowledgeIndex,
        role: Role,
        srs: &str,
    ) -> Result<Vec<&'k KnowledgeChunk>, AgentError> {
        if kb.is_empty() {
            return Ok(Vec::new());
        }
        let hits = kb.search(srs, role, self.top_k)?;
        Ok(hits.iter().filter_map(|h| kb.chunk(&h.chunk_id)).collect())
    }

    pub fn prompt(&self, input: &TaskInput<'_>, kb: &KnowledgeIndex) -> Result<Prompt, AgentError> {
        let retrieved = self.retrieve(kb, input.role, input.srs)?;
        assemble_prompt(self.templates.get(input.role), input, &retrieved)
    }

    /// Runs one task: at most one initial call and [`MAX_REPAIRS`] re-asks
    /// that quote the validation errors.
    pub fn run_agent_task(
        &self,
        input: &TaskInput<'_>,
        kb: &KnowledgeIndex,
        backend: &dyn CompletionBackend,
    ) -> Result<TaskOutcome, AgentError> {
        let base = self.prompt(input, kb)?;
        let ctx = ValidationContext {
            task: input.task,
            srs: input.srs,
            package: input.package,
            interactive: input.interactive,
            prompt_citations: &base.knowledge_citations,
        };
        let mut failures: Vec<FailedAttempt> = Vec::new();
        for attempt in 0..=MAX_REPAIRS {
            let prompt = match failures.last() {
                Some(last) => repair_prompt(&base, &last.errors),
                None => base.clone(),
            };
            let key = TaskKey {
                role: input.role,
                round: input.round,
                task: input.task,
                attempt,
            };
            let raw = backend.complete(&key, &prompt, &self.params).map_err(|e| {
                AgentError::BackendUnavailable {
                    role: input.role,
                    message: e.to_string(),
                }
            })?;
            match validate_output(input.role, &raw, &ctx) {
                Ok(v) => {
                    tracing::debug!(role = %input.role, task = %input.task, attempt, "agent output accepted");
                    return Ok(TaskOutcome {
                        artifacts: v.artifacts,
                        grounding_trace: v.citations,
                        attempts: attempt + 1,
                    });
                }
                Err(errors) => {
                    tracing::debug!(role = %input.role, attempt, errors = errors.len(), "agent output rejected");
                    failures.push(FailedAttempt { raw, errors });
                }
            }
        }
        Err(AgentError::AgentOutputInvalid {
            role: input.role,
            attempts: failures,
        })
    }
}
