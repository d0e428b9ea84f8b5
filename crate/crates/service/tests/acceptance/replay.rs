use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use maad_core::agent::{AdversarialBackend, CompletionBackend, ReplayBackend};
use maad_core::kb::{HashEmbedder, KnowledgeIndex};
use maad_core::orchestrator::{
    replay, Engine, FixedClock, Phase, Session, SessionConfig, SessionStore,
};
use maad_core::Role;

use crate::common::{fixture, srs};
use crate::{oracle, termination, Outcome};

const ADVERSARIAL: usize = 12;
const SEED: u64 = 0x4e91_0006;

struct Fixture {
    kb: Arc<KnowledgeIndex>,
    data: tempfile::TempDir,
    overlay: tempfile::TempDir,
    empty: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let mut kb = KnowledgeIndex::new(Arc::new(HashEmbedder));
        kb.ingest_corpus(&fixture().join("knowledge")).unwrap();
        let overlay = tempfile::tempdir().unwrap();
        for (from, to) in [
            ("designer_2_refine", "designer_3_refine"),
            ("evaluator_2_evaluate", "evaluator_3_evaluate"),
        ] {
            std::fs::copy(
                fixture().join("replay").join(format!("{from}.txt")),
                overlay.path().join(format!("{to}.txt")),
            )
            .unwrap();
        }
        Fixture {
            kb: Arc::new(kb),
            data: tempfile::tempdir().unwrap(),
            overlay,
            empty: tempfile::tempdir().unwrap(),
        }
    }

    fn engine(&self, backend: Arc<dyn CompletionBackend>) -> Engine {
        Engine::new(self.kb.clone(), backend).with_clock(Arc::new(FixedClock::default()))
    }

    fn replaying(&self, roots: Vec<PathBuf>) -> Engine {
        self.engine(Arc::new(ReplayBackend::layered(roots)))
    }

    fn start(&self, id: &str, config: SessionConfig, engine: &Engine) -> Session {
        let store = SessionStore::create(self.data.path(), id).unwrap();
        Session::start(id, &srs(), config, engine.clock.as_ref(), Some(store)).unwrap()
    }
}

/// A finished session: its journal as written to disk and its live digest.
struct Recorded {
    name: String,
    lines: Vec<String>,
    digest: String,
    phase: Phase,
}

fn recorded(name: &str, s: &Session) -> Recorded {
    let lines = match s.store() {
        Some(store) => std::fs::read_to_string(store.journal_path())
            .unwrap()
            .lines()
            .map(str::to_string)
            .collect(),
        None => s.journal().iter().map(|e| e.to_line()).collect(),
    };
    Recorded {
        name: name.to_string(),
        lines,
        digest: s.state().digest(),
        phase: s.phase(),
    }
}

fn sessions(f: &Fixture) -> Vec<Recorded> {
    let replay_dir = fixture().join("replay");
    let mut out = Vec::new();

    let engine = f.replaying(vec![replay_dir.clone()]);
    let mut s = f.start("plain", SessionConfig::default(), &engine);
    let _ = s.run_to_completion(&engine);
    out.push(recorded("plain", &s));

    let engine = f.replaying(vec![fixture().join("interactive"), replay_dir.clone()]);
    let config = SessionConfig {
        interactive: true,
        ..SessionConfig::default()
    };
    let mut s = f.start("interactive", config, &engine);
    let _ = s.run_to_completion(&engine);
    let pending: Vec<String> = s
        .state()
        .package
        .pending_clarifications()
        .map(|c| c.question_id.clone())
        .collect();
    for q in pending {
        s.submit_clarification_answer(engine.clock.as_ref(), &q, "Within two working days.")
            .unwrap();
    }
    let _ = s.run_to_completion(&engine);
    out.push(recorded("interactive", &s));

    let engine = f.replaying(vec![f.overlay.path().into(), replay_dir.clone()]);
    let mut s = f.start("rejected", SessionConfig::default(), &engine);
    let _ = s.run_to_completion(&engine);
    let _ = s.reject(engine.clock.as_ref(), "Show the restock flow.");
    let _ = s.run_to_completion(&engine);
    out.push(recorded("rejected", &s));

    for (name, config) in [
        (
            "one-round",
            SessionConfig {
                max_rounds: 1,
                ..SessionConfig::default()
            },
        ),
        (
            "lenient",
            SessionConfig {
                severity_threshold: 4,
                ..SessionConfig::default()
            },
        ),
    ] {
        let engine = f.replaying(vec![replay_dir.clone()]);
        let mut s = f.start(name, config, &engine);
        let _ = s.run_to_completion(&engine);
        out.push(recorded(name, &s));
    }

    let engine = f.replaying(vec![f.empty.path().into()]);
    let mut s = f.start("no-replies", SessionConfig::default(), &engine);
    let _ = s.run_to_completion(&engine);
    out.push(recorded("no-replies", &s));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..ADVERSARIAL {
        let replies: Vec<String> = (0..rng.random_range(1..=6))
            .map(|_| termination::reply(&mut rng))
            .collect();
        let backend = AdversarialBackend::from_files(
            &replay_dir,
            &[
                (Role::Analyst, "analyst_1_initial.txt"),
                (Role::Modeler, "modeler_1_initial.txt"),
                (Role::Designer, "designer_2_refine.txt"),
            ],
            replies,
        )
        .unwrap();
        let engine = f.engine(Arc::new(backend));
        let config = SessionConfig {
            max_rounds: rng.random_range(1..=5),
            severity_threshold: rng.random_range(1..=4),
            ..SessionConfig::default()
        };
        let name = format!("adversarial-{i}");
        let mut s = Session::start(&name, &srs(), config, engine.clock.as_ref(), None).unwrap();
        let _ = s.run_to_completion(&engine);
        out.push(recorded(&name, &s));
    }
    out
}

fn check(r: &Recorded) -> Result<(), String> {
    let full = replay(&r.lines).map_err(|e| e.to_string())?;
    if full.digest() != r.digest {
        return Err("replayed digest differs from the live state".into());
    }
    let expected = oracle::phases(&r.lines);
    for n in 1..=r.lines.len() {
        let state = replay(&r.lines[..n]).map_err(|e| format!("prefix {n}: {e}"))?;
        if state.phase.as_str() != expected[n - 1] {
            return Err(format!(
                "after event {n}: replay says {}, journal implies {}",
                state.phase.as_str(),
                expected[n - 1]
            ));
        }
    }
    if expected.last().map(String::as_str) != Some(r.phase.as_str()) {
        return Err(format!("live phase {} not reached", r.phase));
    }
    Ok(())
}

pub fn criterion() -> Outcome {
    let f = Fixture::new();
    let recorded = sessions(&f);
    let events: usize = recorded.iter().map(|r| r.lines.len()).sum();
    let terminal: Vec<String> = recorded
        .iter()
        .filter(|r| !r.phase.is_terminal())
        .map(|r| format!("{} ended in {}", r.name, r.phase))
        .collect();
    let failures: Vec<String> = recorded
        .iter()
        .filter_map(|r| check(r).err().map(|e| format!("{}: {e}", r.name)))
        .chain(terminal)
        .collect();
    let detail = if failures.is_empty() {
        format!(
            "{} sessions ({events} events): full replay matches the live digest and every prefix matches the journal's phase",
            recorded.len()
        )
    } else {
        failures.join("; ")
    };
    Outcome::check(failures.is_empty(), detail)
}
