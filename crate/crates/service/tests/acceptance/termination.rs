use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use maad_core::agent::AdversarialBackend;
use maad_core::kb::{HashEmbedder, KnowledgeIndex};
use maad_core::orchestrator::{Engine, FixedClock, Session, SessionConfig};
use maad_core::Role;

use crate::common::{fixture, srs};
use crate::{oracle, Outcome};

const SESSIONS: usize = 200;
const SEED: u64 = 0x7e57_0001;
const HANG_TIMEOUT: Duration = Duration::from_secs(30);

const WORDS: [&str; 12] = [
    "latency", "payment", "catalog", "failover", "audit", "cache", "queue", "checkout", "stock",
    "search", "privacy", "retry",
];

fn judged(rng: &mut ChaCha8Rng) -> Value {
    let stages = [
        json!("analysis"),
        json!("modeling"),
        json!("design"),
        Value::Null,
    ];
    let words: Vec<&str> = (0..rng.random_range(2..6))
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect();
    let refs: Vec<String> = (0..rng.random_range(0..3))
        .map(|_| format!("R-{}", rng.random_range(1..=9)))
        .collect();
    let mut m = json!({
        "description": words.join(" "),
        "severity": rng.random_range(1..=4),
        "requirement_refs": refs,
    });
    let stage = stages[rng.random_range(0..stages.len())].clone();
    if !stage.is_null() {
        m["stage"] = stage;
    }
    m
}

/// One evaluator reply: usually a random mismatch list, occasionally output
/// that fails validation.
pub fn reply(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.05) {
        return "The design looks fine to me.".to_string();
    }
    let mismatches: Vec<Value> = (0..rng.random_range(0..=3)).map(|_| judged(rng)).collect();
    format!(
        "```json\n{}\n```",
        json!({ "mismatches": mismatches, "citations": [] })
    )
}

struct Run {
    max_rounds: u32,
    terminal: bool,
    evaluations: usize,
    agent_tasks: usize,
}

fn run_one(kb: Arc<KnowledgeIndex>, config: SessionConfig, replies: Vec<String>) -> Run {
    let backend = AdversarialBackend::from_files(
        &fixture().join("replay"),
        &[
            (Role::Analyst, "analyst_1_initial.txt"),
            (Role::Modeler, "modeler_1_initial.txt"),
            (Role::Designer, "designer_2_refine.txt"),
        ],
        replies,
    )
    .unwrap();
    let engine = Engine::new(kb, Arc::new(backend)).with_clock(Arc::new(FixedClock::default()));
    let max_rounds = config.max_rounds;
    let mut s = Session::start("t", &srs(), config, engine.clock.as_ref(), None).unwrap();
    // Agent failures abort the session and surface as errors; both end it.
    let _ = s.run_to_completion(&engine);
    let lines: Vec<String> = s.journal().iter().map(|e| e.to_line()).collect();
    Run {
        max_rounds,
        terminal: s.phase().is_terminal(),
        evaluations: oracle::count_events(&lines, "EvaluationCompleted", None),
        agent_tasks: oracle::count_events(&lines, "AgentTaskStarted", None),
    }
}

pub fn criterion() -> Outcome {
    let mut kb = KnowledgeIndex::new(Arc::new(HashEmbedder));
    kb.ingest_corpus(&fixture().join("knowledge")).unwrap();
    let kb = Arc::new(kb);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut hangs = 0;
    let mut failures = Vec::new();
    let mut confirmed_or_aborted = 0;
    let mut max_tasks_seen = 0;
    for i in 0..SESSIONS {
        let config = SessionConfig {
            max_rounds: rng.random_range(1..=6),
            severity_threshold: rng.random_range(1..=4),
            ..SessionConfig::default()
        };
        let replies: Vec<String> = (0..rng.random_range(1..=7))
            .map(|_| reply(&mut rng))
            .collect();
        let (tx, rx) = mpsc::channel();
        let kb = kb.clone();
        std::thread::spawn(move || {
            let _ = tx.send(run_one(kb, config, replies));
        });
        let run = match rx.recv_timeout(HANG_TIMEOUT) {
            Ok(run) => run,
            Err(_) => {
                hangs += 1;
                failures.push(format!("session {i} did not finish"));
                continue;
            }
        };
        let budget = 4 + 3 * run.max_rounds as usize;
        max_tasks_seen = max_tasks_seen.max(run.agent_tasks);
        if run.terminal {
            confirmed_or_aborted += 1;
        } else {
            failures.push(format!("session {i} stopped in a non-terminal phase"));
        }
        if run.evaluations > run.max_rounds as usize {
            failures.push(format!(
                "session {i}: {} evaluations > max_rounds {}",
                run.evaluations, run.max_rounds
            ));
        }
        if run.agent_tasks > budget {
            failures.push(format!(
                "session {i}: {} agent tasks > {budget}",
                run.agent_tasks
            ));
        }
    }
    Outcome::check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{confirmed_or_aborted}/{SESSIONS} terminated within budget, {hangs} hangs, max {max_tasks_seen} agent tasks"
            )
        } else {
            format!("{} failures: {}", failures.len(), failures.join("; "))
        },
    )
}
