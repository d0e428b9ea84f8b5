//! Session state machine driving the four roles from an SRS to a confirmed
//! (or aborted) design package.
//!
//! State is event-sourced: every transition is a [`JournalEvent`] folded by
//! [`SessionState::apply`], both live and in [`replay`], so a journal always
//! reconstructs the state it was written from.

mod journal;
mod state;

use std::sync::Arc;

use thiserror::Error;

use crate::agent::{
    AgentArtifacts, AgentError, AgentRuntime, CompletionBackend, TaskInput, TaskKind,
};
use crate::artifact::{package_digest, DesignPackage, RefinementSuggestion, Stage};
use crate::evaluator::{Decision, EvalError, Evaluator};
use crate::kb::KnowledgeIndex;
use crate::Role;

pub use journal::{
    Clock, EventKind, FixedClock, JournalEvent, RefinementOrigin, SessionStore, SystemClock,
};
pub use state::{replay, BackendSelector, Phase, SessionConfig, SessionState};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("SRS text is empty")]
    EmptySrs,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("session is in terminal phase {0}")]
    TerminalState(Phase),
    #[error("operation not allowed in phase {phase}: {reason}")]
    InvalidState { phase: Phase, reason: String },
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("question `{0}` is already answered")]
    AlreadyAnswered(String),
    #[error("answer text is empty")]
    EmptyAnswer,
    #[error("session awaits answers to: {}", .0.join(", "))]
    AwaitingClarification(Vec<String>),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error("journal is empty")]
    EmptyJournal,
    #[error("corrupt journal: {0}")]
    CorruptJournal(String),
    #[error("journal write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared, session-independent machinery.
#[derive(Clone)]
pub struct Engine {
    pub runtime: AgentRuntime,
    pub kb: Arc<KnowledgeIndex>,
    pub backend: Arc<dyn CompletionBackend>,
    pub evaluator: Evaluator,
    pub clock: Arc<dyn Clock>,
}

impl Engine {
    pub fn new(kb: Arc<KnowledgeIndex>, backend: Arc<dyn CompletionBackend>) -> Self {
        Engine {
            runtime: AgentRuntime::default(),
            kb,
            backend,
            evaluator: Evaluator::default(),
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }
}

/// Upper bound on agent tasks per session: a full first round plus three
/// tasks for each further round.
pub fn agent_task_budget(max_rounds: u32) -> u32 {
    4 + 3 * max_rounds
}

/// Tasks re-run when refinement restarts at `stage`, evaluation included.
pub fn rerun_tasks(stage: Stage) -> u32 {
    match stage {
        Stage::Analysis => 4,
        Stage::Modeling => 3,
        Stage::Design => 2,
    }
}

/// Stakeholder decision on a confirmed design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StakeholderDecision {
    Approve,
    Reject,
}

/// One live session: the folded state, its journal, and an optional store
/// mirroring both to disk.
#[derive(Debug)]
pub struct Session {
    state: SessionState,
    journal: Vec<JournalEvent>,
    store: Option<SessionStore>,
}

impl Session {
    /// Validates inputs and records `SessionStarted`; the session is then in
    /// `ANALYSIS`.
    pub fn start(
        session_id: &str,
        srs_text: &str,
        config: SessionConfig,
        clock: &dyn Clock,
        store: Option<SessionStore>,
    ) -> Result<Self, OrchestratorError> {
        if srs_text.trim().is_empty() {
            return Err(OrchestratorError::EmptySrs);
        }
        config.validate()?;
        let event = JournalEvent {
            seq: 1,
            timestamp: clock.now(),
            event: EventKind::SessionStarted {
                session_id: session_id.to_string(),
                srs_text: srs_text.to_string(),
                config,
            },
        };
        let state = SessionState::apply(None, &event)?;
        let mut session = Session {
            state,
            journal: Vec::new(),
            store,
        };
        session.persist(&event)?;
        session.journal.push(event);
        Ok(session)
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn journal(&self) -> &[JournalEvent] {
        &self.journal
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn store(&self) -> Option<&SessionStore> {
        self.store.as_ref()
    }

    fn persist(&mut self, event: &JournalEvent) -> Result<(), OrchestratorError> {
        if let Some(store) = self.store.as_mut() {
            store.append(event)?;
        }
        Ok(())
    }

    /// Appends and folds one event; the only way state changes.
    fn record(
        &mut self,
        clock: &dyn Clock,
        kind: EventKind,
    ) -> Result<JournalEvent, OrchestratorError> {
        let event = JournalEvent {
            seq: self.state.last_seq + 1,
            timestamp: clock.now(),
            event: kind,
        };
        let before = self.state.phase;
        let next = SessionState::apply(Some(self.state.clone()), &event)?;
        self.state = next;
        self.persist(&event)?;
        if self.state.phase != before {
            if let Some(store) = &self.store {
                store.snapshot(
                    self.state.phase,
                    self.state.round_count,
                    &self.state.package,
                )?;
            }
        }
        self.journal.push(event.clone());
        Ok(event)
    }

    fn abort(
        &mut self,
        clock: &dyn Clock,
        cause: String,
        out: &mut Vec<JournalEvent>,
    ) -> Result<(), OrchestratorError> {
        tracing::warn!(session = %self.state.session_id, %cause, "session aborted");
        out.push(self.record(clock, EventKind::SessionAborted { cause })?);
        Ok(())
    }

    fn task_kind(&self, role: Role) -> TaskKind {
        if self.state.round_count > 0 || self.state.stakeholder_rejections > 0 {
            return TaskKind::Refine;
        }
        if role == Role::Analyst && self.state.answers_received {
            TaskKind::Clarified
        } else {
            TaskKind::Initial
        }
    }

    fn run_task(
        &mut self,
        engine: &Engine,
        role: Role,
        out: &mut Vec<JournalEvent>,
    ) -> Result<(), OrchestratorError> {
        let clock = engine.clock.as_ref();
        let round = self.state.round_count + 1;
        let task = if role == Role::Evaluator {
            TaskKind::Evaluate
        } else {
            self.task_kind(role)
        };
        out.push(self.record(clock, EventKind::AgentTaskStarted { role, task, round })?);
        let directives = self.state.directives_for(role);
        let mut runtime = engine.runtime.clone();
        runtime.top_k = self.state.config.top_k;
        let input = TaskInput {
            role,
            task,
            round,
            srs: &self.state.srs_text,
            package: &self.state.package,
            directives: &directives,
            interactive: self.state.config.interactive,
        };
        let outcome = match runtime.run_agent_task(&input, &engine.kb, engine.backend.as_ref()) {
            Ok(outcome) => outcome,
            Err(e) => {
                self.abort(clock, format!("{role} task failed: {e}"), out)?;
                return Err(e.into());
            }
        };
        let questions = match &outcome.artifacts {
            AgentArtifacts::Analysis { questions, .. } => questions.clone(),
            _ => Vec::new(),
        };
        out.push(self.record(
            clock,
            EventKind::AgentTaskCompleted {
                role,
                task,
                round,
                artifacts: outcome.artifacts,
                grounding_trace: outcome.grounding_trace,
                attempts: outcome.attempts,
            },
        )?);
        for q in questions {
            out.push(self.record(
                clock,
                EventKind::ClarificationAsked {
                    question_id: q.question_id,
                    risk_id: q.risk_id,
                    question: q.question,
                },
            )?);
        }
        Ok(())
    }

    fn evaluate(
        &mut self,
        engine: &Engine,
        out: &mut Vec<JournalEvent>,
    ) -> Result<(), OrchestratorError> {
        let clock = engine.clock.as_ref();
        self.run_task(engine, Role::Evaluator, out)?;
        let Some(EventKind::AgentTaskCompleted {
            artifacts:
                AgentArtifacts::Evaluation {
                    mismatches,
                    directives,
                },
            ..
        }) = self.journal.last().map(|e| &e.event)
        else {
            unreachable!("evaluator task records an evaluation");
        };
        let judged = mismatches.clone();
        let directives: Vec<(String, String)> = directives
            .iter()
            .map(|d| (d.mismatch_id.clone(), d.directive.clone()))
            .collect();
        let assessment = match engine.evaluator.assess(
            &self.state.package,
            judged,
            &directives,
            self.state.config.severity_threshold,
        ) {
            Ok(a) => a,
            Err(e) => {
                self.abort(clock, format!("evaluation failed: {e}"), out)?;
                return Err(e.into());
            }
        };
        let round = self.state.round_count + 1;
        let verdict = assessment.verdict.clone();
        out.push(self.record(
            clock,
            EventKind::EvaluationCompleted {
                round,
                mismatches: assessment.mismatches,
                root_causes: assessment.root_causes,
                refinements: assessment.refinements,
                verdict: verdict.clone(),
            },
        )?);
        match self.state.phase {
            Phase::Confirmed => {
                let digest = match package_digest(&self.state.package) {
                    Ok(d) => d,
                    Err(e) => {
                        return self.abort(
                            clock,
                            format!("confirmed package is not canonical: {e}"),
                            out,
                        )
                    }
                };
                out.push(self.record(
                    clock,
                    EventKind::SessionConfirmed {
                        round_count: round,
                        package_digest: digest,
                    },
                )?);
            }
            Phase::Aborted => {
                let cause = format!(
                    "round budget of {} exhausted with {} open mismatch(es)",
                    self.state.config.max_rounds,
                    verdict.open_mismatches.len()
                );
                out.push(self.record(clock, EventKind::SessionAborted { cause })?);
            }
            _ => {
                let stage = verdict.routed_stage.unwrap_or(Stage::Design);
                let budget = agent_task_budget(self.state.config.max_rounds);
                if self.state.agent_tasks + rerun_tasks(stage) > budget {
                    let cause = format!(
                        "agent task budget of {budget} exhausted: refining {} needs {} more",
                        stage.as_str(),
                        rerun_tasks(stage)
                    );
                    return self.abort(clock, cause, out);
                }
                let refinements = self.state.pending_refinements.clone();
                out.push(self.record(
                    clock,
                    EventKind::RefinementRouted {
                        stage,
                        origin: RefinementOrigin::Evaluator,
                        refinements,
                    },
                )?);
            }
        }
        debug_assert!(verdict.decision == Decision::Refine || self.state.phase == Phase::Confirmed);
        Ok(())
    }

    /// Executes exactly one transition and returns the events it appended.
    /// `AWAIT_CLARIFICATION` is a no-op until every question is answered.
    pub fn step(&mut self, engine: &Engine) -> Result<Vec<JournalEvent>, OrchestratorError> {
        let mut out = Vec::new();
        match self.state.phase {
            p if p.is_terminal() => return Err(OrchestratorError::TerminalState(p)),
            Phase::Init => {
                return Err(OrchestratorError::InvalidState {
                    phase: Phase::Init,
                    reason: "session was not started".into(),
                })
            }
            Phase::AwaitClarification => {}
            Phase::Analysis | Phase::RefineAnalysis => {
                self.run_task(engine, Role::Analyst, &mut out)?
            }
            Phase::Modeling | Phase::RefineModeling => {
                self.run_task(engine, Role::Modeler, &mut out)?
            }
            Phase::Design | Phase::RefineDesign => {
                self.run_task(engine, Role::Designer, &mut out)?
            }
            Phase::Evaluation => self.evaluate(engine, &mut out)?,
            Phase::Confirmed | Phase::Aborted => unreachable!(),
        }
        Ok(out)
    }

    pub fn submit_clarification_answer(
        &mut self,
        clock: &dyn Clock,
        question_id: &str,
        answer: &str,
    ) -> Result<&SessionState, OrchestratorError> {
        let exchange = self
            .state
            .package
            .clarifications
            .iter()
            .find(|c| c.question_id == question_id)
            .ok_or_else(|| OrchestratorError::UnknownQuestion(question_id.to_string()))?;
        if !exchange.is_pending() {
            return Err(OrchestratorError::AlreadyAnswered(question_id.to_string()));
        }
        if self.state.phase != Phase::AwaitClarification {
            return Err(OrchestratorError::InvalidState {
                phase: self.state.phase,
                reason: "no clarification is awaited".into(),
            });
        }
        if answer.trim().is_empty() {
            return Err(OrchestratorError::EmptyAnswer);
        }
        self.record(
            clock,
            EventKind::ClarificationAnswered {
                question_id: question_id.to_string(),
                answer: answer.trim().to_string(),
            },
        )?;
        Ok(&self.state)
    }

    /// Records a stakeholder rejection of a confirmed design: one extra design
    /// refinement, at most once per session and only within the round budget.
    pub fn reject(
        &mut self,
        clock: &dyn Clock,
        comment: &str,
    ) -> Result<&SessionState, OrchestratorError> {
        let s = &self.state;
        if s.phase != Phase::Confirmed {
            return Err(OrchestratorError::InvalidState {
                phase: s.phase,
                reason: "only a confirmed design can be rejected".into(),
            });
        }
        if s.stakeholder_rejections > 0
            || s.round_count >= s.config.max_rounds
            || s.agent_tasks + rerun_tasks(Stage::Design) > agent_task_budget(s.config.max_rounds)
        {
            return Err(OrchestratorError::InvalidState {
                phase: s.phase,
                reason: "no refinement budget left".into(),
            });
        }
        let directive = if comment.trim().is_empty() {
            "Stakeholder rejected the design; revisit the diagrams.".to_string()
        } else {
            comment.trim().to_string()
        };
        self.record(
            clock,
            EventKind::RefinementRouted {
                stage: Stage::Design,
                origin: RefinementOrigin::Stakeholder,
                refinements: vec![RefinementSuggestion {
                    mismatch_id: "stakeholder".into(),
                    target_stage: Stage::Design,
                    directive,
                }],
            },
        )?;
        Ok(&self.state)
    }

    /// Steps until `CONFIRMED` or `ABORTED`. Pending questions are answered
    /// from `config.preseeded_answers`; any other pending question is an error.
    pub fn run_to_completion(
        &mut self,
        engine: &Engine,
    ) -> Result<DesignPackage, OrchestratorError> {
        while !self.state.phase.is_terminal() {
            if self.state.phase == Phase::AwaitClarification {
                let pending: Vec<String> = self
                    .state
                    .package
                    .pending_clarifications()
                    .map(|c| c.question_id.clone())
                    .collect();
                let missing: Vec<String> = pending
                    .iter()
                    .filter(|q| !self.state.config.preseeded_answers.contains_key(*q))
                    .cloned()
                    .collect();
                if !missing.is_empty() {
                    return Err(OrchestratorError::AwaitingClarification(missing));
                }
                for q in pending {
                    let answer = self.state.config.preseeded_answers[&q].clone();
                    self.submit_clarification_answer(engine.clock.as_ref(), &q, &answer)?;
                }
                continue;
            }
            self.step(engine)?;
        }
        Ok(self.state.package.clone())
    }
}
