//! Journal events, the on-disk session layout and clocks.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{Phase, SessionConfig};
use crate::agent::{AgentArtifacts, TaskKind};
use crate::artifact::{DesignPackage, MismatchReport, RefinementSuggestion, RootCause, Stage};
use crate::evaluator::Verdict;
use crate::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementOrigin {
    Evaluator,
    Stakeholder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    SessionStarted {
        session_id: String,
        srs_text: String,
        config: SessionConfig,
    },
    AgentTaskStarted {
        role: Role,
        task: TaskKind,
        round: u32,
    },
    AgentTaskCompleted {
        role: Role,
        task: TaskKind,
        round: u32,
        artifacts: AgentArtifacts,
        grounding_trace: Vec<String>,
        attempts: u32,
    },
    ClarificationAsked {
        question_id: String,
        risk_id: String,
        question: String,
    },
    ClarificationAnswered {
        question_id: String,
        answer: String,
    },
    EvaluationCompleted {
        round: u32,
        mismatches: Vec<MismatchReport>,
        root_causes: Vec<RootCause>,
        refinements: Vec<RefinementSuggestion>,
        verdict: Verdict,
    },
    RefinementRouted {
        stage: Stage,
        origin: RefinementOrigin,
        refinements: Vec<RefinementSuggestion>,
    },
    SessionConfirmed {
        round_count: u32,
        package_digest: String,
    },
    SessionAborted {
        cause: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionStarted { .. } => "SessionStarted",
            EventKind::AgentTaskStarted { .. } => "AgentTaskStarted",
            EventKind::AgentTaskCompleted { .. } => "AgentTaskCompleted",
            EventKind::ClarificationAsked { .. } => "ClarificationAsked",
            EventKind::ClarificationAnswered { .. } => "ClarificationAnswered",
            EventKind::EvaluationCompleted { .. } => "EvaluationCompleted",
            EventKind::RefinementRouted { .. } => "RefinementRouted",
            EventKind::SessionConfirmed { .. } => "SessionConfirmed",
            EventKind::SessionAborted { .. } => "SessionAborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEvent {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub event: EventKind,
}

impl JournalEvent {
    /// The single-line JSON form written to `journal.jsonl`.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("journal events serialize")
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always reports the same instant; makes journals byte-reproducible.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Default for FixedClock {
    fn default() -> Self {
        FixedClock(Utc.timestamp_opt(0, 0).single().expect("epoch is valid"))
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

/// `sessions/<id>/journal.jsonl` plus `sessions/<id>/artifacts/<PHASE>_<round>.json`.
#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    journal: File,
}

impl SessionStore {
    pub fn create(root: &Path, session_id: &str) -> std::io::Result<Self> {
        let dir = root.join("sessions").join(session_id);
        fs::create_dir_all(dir.join("artifacts"))?;
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("journal.jsonl"))?;
        Ok(SessionStore { dir, journal })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn journal_path(&self) -> PathBuf {
        self.dir.join("journal.jsonl")
    }

    pub fn append(&mut self, event: &JournalEvent) -> std::io::Result<()> {
        let mut line = event.to_line();
        line.push('\n');
        self.journal.write_all(line.as_bytes())?;
        self.journal.flush()
    }

    pub fn snapshot(
        &self,
        phase: Phase,
        round: u32,
        package: &DesignPackage,
    ) -> std::io::Result<()> {
        let path = self
            .dir
            .join("artifacts")
            .join(format!("{}_{round}.json", phase.as_str()));
        let bytes = serde_json::to_vec_pretty(package).map_err(std::io::Error::other)?;
        fs::write(path, bytes)
    }
}
