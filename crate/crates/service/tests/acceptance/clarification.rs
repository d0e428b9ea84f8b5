use std::sync::Arc;

use maad_core::agent::ReplayBackend;
use maad_core::artifact::Resolution;
use maad_core::kb::{HashEmbedder, KnowledgeIndex};
use maad_core::orchestrator::{
    Engine, FixedClock, OrchestratorError, Phase, Session, SessionConfig,
};

use crate::common::{fixture, srs};
use crate::Outcome;

fn engine(roots: Vec<std::path::PathBuf>) -> Engine {
    let mut kb = KnowledgeIndex::new(Arc::new(HashEmbedder));
    kb.ingest_corpus(&fixture().join("knowledge")).unwrap();
    Engine::new(Arc::new(kb), Arc::new(ReplayBackend::layered(roots)))
        .with_clock(Arc::new(FixedClock::default()))
}

fn started_roles(session: &Session) -> Vec<String> {
    session
        .journal()
        .iter()
        .filter_map(|e| match &e.event {
            maad_core::orchestrator::EventKind::AgentTaskStarted { role, .. } => {
                Some(role.as_str().to_string())
            }
            _ => None,
        })
        .collect()
}

fn interactive() -> Result<String, String> {
    let engine = engine(vec![
        fixture().join("interactive"),
        fixture().join("replay"),
    ]);
    let config = SessionConfig {
        interactive: true,
        ..SessionConfig::default()
    };
    let mut s = Session::start("gate", &srs(), config, engine.clock.as_ref(), None)
        .map_err(|e| e.to_string())?;
    s.step(&engine).map_err(|e| e.to_string())?;
    if s.phase() != Phase::AwaitClarification {
        return Err(format!("after analysis: {}", s.phase()));
    }
    let pending: Vec<String> = s
        .state()
        .package
        .pending_clarifications()
        .map(|c| c.question_id.clone())
        .collect();
    if pending.is_empty() {
        return Err("no pending question".into());
    }

    let before = s.journal().len();
    for _ in 0..3 {
        let appended = s.step(&engine).map_err(|e| e.to_string())?;
        if !appended.is_empty() || s.phase() != Phase::AwaitClarification {
            return Err("step advanced past the gate".into());
        }
    }
    match s.run_to_completion(&engine) {
        Err(OrchestratorError::AwaitingClarification(ids)) if ids == pending => {}
        other => {
            return Err(format!(
                "unattended run did not stop at the gate: {other:?}"
            ))
        }
    }
    if s.journal().len() != before || started_roles(&s).iter().any(|r| r != "analyst") {
        return Err("downstream work started before the answer".into());
    }

    for q in &pending {
        s.submit_clarification_answer(
            engine.clock.as_ref(),
            q,
            "New providers must go live within two days.",
        )
        .map_err(|e| e.to_string())?;
    }
    if s.phase() != Phase::Analysis {
        return Err(format!("after answering: {}", s.phase()));
    }
    s.run_to_completion(&engine).map_err(|e| e.to_string())?;
    if s.phase() != Phase::Confirmed {
        return Err(format!("final phase {}", s.phase()));
    }
    let roles = started_roles(&s);
    if roles[..3] != ["analyst", "analyst", "modeler"] {
        return Err(format!("task order {roles:?}"));
    }
    Ok(format!(
        "{} question(s) gated, then confirmed",
        pending.len()
    ))
}

fn unattended() -> Result<String, String> {
    let engine = engine(vec![fixture().join("replay")]);
    let mut s = Session::start(
        "assumed",
        &srs(),
        SessionConfig::default(),
        engine.clock.as_ref(),
        None,
    )
    .map_err(|e| e.to_string())?;
    s.run_to_completion(&engine).map_err(|e| e.to_string())?;
    let pkg = &s.state().package;
    if s.phase() != Phase::Confirmed {
        return Err(format!("final phase {}", s.phase()));
    }
    if !pkg.clarifications.is_empty() || pkg.risk_flags.is_empty() {
        return Err("expected risks without questions".into());
    }
    for risk in &pkg.risk_flags {
        let text = risk.assumption.as_deref().unwrap_or("").trim();
        if risk.resolution != Resolution::Assumed || text.is_empty() {
            return Err(format!(
                "risk {} is not an assumed resolution with text",
                risk.id
            ));
        }
    }
    Ok(format!(
        "{} risk(s) assumed with text",
        pkg.risk_flags.len()
    ))
}

pub fn criterion() -> Outcome {
    match (interactive(), unattended()) {
        (Ok(a), Ok(b)) => Outcome::check(true, format!("interactive: {a}; non-interactive: {b}")),
        (a, b) => Outcome::check(
            false,
            format!(
                "interactive: {}; non-interactive: {}",
                a.unwrap_or_else(|e| e),
                b.unwrap_or_else(|e| e)
            ),
        ),
    }
}
