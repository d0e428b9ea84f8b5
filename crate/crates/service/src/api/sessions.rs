//! Live sessions held by the server, each driven by a background worker.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use maad_core::artifact::package_digest;
use maad_core::orchestrator::{
    Engine, OrchestratorError, Phase, Session, SessionState, StakeholderDecision,
};

pub const VERDICT_FILE: &str = "verdict.json";

/// The stakeholder's recorded decision, kept next to the journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeholderVerdict {
    pub decision: StakeholderDecision,
    #[serde(default)]
    pub comment: String,
    pub round_count: u32,
    pub package_digest: String,
}

pub struct SessionHandle {
    pub id: String,
    dir: PathBuf,
    engine: Engine,
    session: Mutex<Session>,
    /// Read side, refreshed after every mutation so reads never wait on an
    /// agent call.
    state: RwLock<Arc<SessionState>>,
    lines: RwLock<Vec<String>>,
    verdict: RwLock<Option<StakeholderVerdict>>,
    seq: watch::Sender<u64>,
    running: AtomicBool,
}

impl std::fmt::Debug for SessionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionHandle")
            .field("id", &self.id)
            .finish()
    }
}

impl SessionHandle {
    pub fn new(id: String, dir: PathBuf, engine: Engine, session: Session) -> Arc<Self> {
        let state = Arc::new(session.state().clone());
        let lines = session.journal().iter().map(|e| e.to_line()).collect();
        let (seq, _) = watch::channel(state.last_seq);
        Arc::new(SessionHandle {
            id,
            dir,
            engine,
            session: Mutex::new(session),
            state: RwLock::new(state),
            lines: RwLock::new(lines),
            verdict: RwLock::new(None),
            seq,
            running: AtomicBool::new(false),
        })
    }

    pub fn state(&self) -> Arc<SessionState> {
        self.state.read().expect("state lock").clone()
    }

    pub fn verdict(&self) -> Option<StakeholderVerdict> {
        self.verdict.read().expect("verdict lock").clone()
    }

    /// Journal lines with `seq > after`.
    pub fn lines_after(&self, after: u64) -> Vec<String> {
        let lines = self.lines.read().expect("lines lock");
        lines.iter().skip(after as usize).cloned().collect()
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.seq.subscribe()
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn publish(&self, session: &Session) {
        let state = Arc::new(session.state().clone());
        {
            let mut lines = self.lines.write().expect("lines lock");
            let have = lines.len();
            lines.extend(session.journal()[have..].iter().map(|e| e.to_line()));
        }
        let seq = state.last_seq;
        *self.state.write().expect("state lock") = state;
        self.seq.send_replace(seq);
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Applies a command under the session lock and publishes the result.
    pub fn command<T>(
        &self,
        f: impl FnOnce(&mut Session, &Engine) -> Result<T, OrchestratorError>,
    ) -> Result<T, OrchestratorError> {
        let mut session = self.lock();
        let out = f(&mut session, &self.engine);
        self.publish(&session);
        out
    }

    pub fn record_verdict(&self, verdict: StakeholderVerdict) -> std::io::Result<()> {
        let bytes = serde_json::to_vec_pretty(&verdict).map_err(std::io::Error::other)?;
        std::fs::write(self.dir.join(VERDICT_FILE), bytes)?;
        *self.verdict.write().expect("verdict lock") = Some(verdict);
        Ok(())
    }

    pub fn current_verdict_record(
        &self,
        decision: StakeholderDecision,
        comment: &str,
    ) -> StakeholderVerdict {
        let state = self.state();
        StakeholderVerdict {
            decision,
            comment: comment.to_string(),
            round_count: state.round_count,
            package_digest: package_digest(&state.package).unwrap_or_default(),
        }
    }

    /// True when a step would make progress: not terminal, and not waiting on
    /// answers that are missing from the preseeded set.
    fn runnable(session: &Session) -> bool {
        let s = session.state();
        match s.phase {
            p if p.is_terminal() => false,
            Phase::AwaitClarification => s
                .package
                .pending_clarifications()
                .all(|c| s.config.preseeded_answers.contains_key(&c.question_id)),
            _ => true,
        }
    }

    fn advance(&self) -> bool {
        let mut session = self.lock();
        if !Self::runnable(&session) {
            return false;
        }
        let result = if session.phase() == Phase::AwaitClarification {
            let answers: Vec<(String, String)> = session
                .state()
                .package
                .pending_clarifications()
                .map(|c| {
                    (
                        c.question_id.clone(),
                        session.state().config.preseeded_answers[&c.question_id].clone(),
                    )
                })
                .collect();
            answers.iter().try_for_each(|(q, a)| {
                session
                    .submit_clarification_answer(self.engine.clock.as_ref(), q, a)
                    .map(|_| ())
            })
        } else {
            session.step(&self.engine).map(|_| ())
        };
        self.publish(&session);
        if let Err(e) = result {
            tracing::warn!(session = %self.id, error = %e, "session step failed");
            return false;
        }
        true
    }

    /// Starts the background worker unless one is already running. The
    /// worker steps until the session is terminal or needs an answer.
    pub fn drive(self: &Arc<Self>) {
        if self.running.swap(true, Ordering::SeqCst) {
            return;
        }
        let handle = self.clone();
        tokio::task::spawn_blocking(move || loop {
            while handle.advance() {}
            handle.running.store(false, Ordering::SeqCst);
            // A command may have made the session runnable after the last
            // check but before the flag was cleared.
            if !Self::runnable(&handle.lock()) || handle.running.swap(true, Ordering::SeqCst) {
                break;
            }
        });
    }
}
