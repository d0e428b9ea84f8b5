//! `maad` command line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use maad_core::artifact::{
    canonicalize, package_digest, sha256_hex, validate_package, ClassModel, DeploymentModel,
    SequenceModel,
};
use maad_core::dsl::{
    check_class_model, check_deployment_model, check_sequence_model, emit_class, emit_deployment,
    emit_sequence, DiagramKind, ModelIssue,
};
use maad_core::kb::{HashEmbedder, KnowledgeIndex, SourceKind, DEFAULT_TOP_K};
use maad_core::orchestrator::{
    replay, OrchestratorError, Phase, Session, SessionConfig, SessionStore,
};
use maad_core::Role;

use crate::api::{self, AppState, ServerConfig};
use crate::setup::{default_data_dir, load_kb, BackendSpec, EngineOptions, DATA_DIR_ENV};

pub const PACKAGE_FILE: &str = "package.json";
pub const DIGEST_FILE: &str = "package.digest";

#[derive(Debug, Parser)]
#[command(
    name = "maad",
    version,
    about = "Knowledge-grounded multi-agent architecture design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct EngineArgs {
    /// Directory with `<role>.txt` prompt templates overriding the built-in ones.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Evaluation rule table (JSON list of {kind, requirement_kind?, severity, stage}).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Knowledge corpus directory with a manifest.json; ingested in memory on
    /// top of the data directory's index. Repeatable.
    #[arg(long = "knowledge")]
    pub corpora: Vec<PathBuf>,
    /// Data directory holding the persistent knowledge index.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
}

impl EngineArgs {
    fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(default_data_dir)
    }

    fn options(&self) -> EngineOptions {
        EngineOptions {
            templates_dir: self.templates.clone(),
            rules_file: self.rules.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceArg {
    Design,
    Literature,
    Expert,
}

impl From<SourceArg> for SourceKind {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Design => SourceKind::DesignCase,
            SourceArg::Literature => SourceKind::Literature,
            SourceArg::Expert => SourceKind::Expert,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Class,
    Sequence,
    Deployment,
}

impl From<KindArg> for DiagramKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Class => DiagramKind::Class,
            KindArg::Sequence => DiagramKind::Sequence,
            KindArg::Deployment => DiagramKind::Deployment,
        }
    }
}

/// Comma-separated roles, e.g. `a,m,d,e`.
#[derive(Debug, Clone)]
pub struct RoleList(pub Vec<Role>);

fn parse_roles(s: &str) -> Result<RoleList, String> {
    s.split(',')
        .filter(|r| !r.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map(RoleList)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a session to completion and write the package.
    Run {
        #[arg(long)]
        srs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `replay:<dir>[,<dir>...]` or `remote`.
        #[arg(long, default_value = "remote")]
        backend: BackendSpec,
        #[arg(long)]
        max_rounds: Option<u32>,
        #[arg(long)]
        threshold: Option<u8>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Let the analyst ask questions; they are read from stdin unless
        /// answered by `--answers`.
        #[arg(long, conflicts_with = "non_interactive")]
        interactive: bool,
        /// Stakeholders are unavailable; risks are resolved by assumption (default).
        #[arg(long)]
        non_interactive: bool,
        /// JSON object mapping question ids to answers.
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long)]
        session_id: Option<String>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Add a document to the persistent knowledge index.
    Ingest {
        #[arg(long, value_enum, required_unless_present = "corpus")]
        source: Option<SourceArg>,
        /// Comma-separated roles: a,m,d,e or full names.
        #[arg(long, value_parser = parse_roles, required_unless_present = "corpus")]
        roles: Option<RoleList>,
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        file: Option<PathBuf>,
        /// Directory with a manifest.json listing {file, source_kind, role_tags}.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
    },
    /// Ranked knowledge chunks for a query.
    KbSearch {
        query: String,
        #[arg(long)]
        role: Role,
        #[arg(short = 'k', default_value_t = DEFAULT_TOP_K)]
        k: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Print the diagram text for a JSON model.
    Render {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Rebuild session state from a journal without calling any backend.
    Replay {
        #[arg(long)]
        journal: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Replay directories for sessions configured with the replay backend.
        #[arg(long = "replay-dir")]
        replay_dirs: Vec<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const ABORTED: i32 = 3;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn failure(message: impl std::fmt::Display) -> Self {
        CliError {
            code: exit::FAILURE,
            message: message.to_string(),
        }
    }
}

type CliResult = Result<i32, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

/// Writes to stdout, ignoring a closed pipe.
fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    let _ = writeln!(std::io::stdout(), "{text}");
}

pub fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run {
            srs,
            out,
            backend,
            max_rounds,
            threshold,
            top_k,
            interactive,
            non_interactive: _,
            answers,
            session_id,
            engine,
        } => {
            let mut config = SessionConfig {
                interactive,
                ..SessionConfig::default()
            };
            if let Some(n) = max_rounds {
                config.max_rounds = n;
            }
            if let Some(t) = threshold {
                config.severity_threshold = t;
            }
            if let Some(k) = top_k {
                config.top_k = k;
            }
            if let Some(path) = answers {
                config.preseeded_answers =
                    serde_json::from_str::<BTreeMap<String, String>>(&read(&path)?)
                        .map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
            }
            run(&srs, &out, &backend, config, session_id, &engine)
        }
        Command::Ingest {
            source,
            roles,
            file,
            corpus,
            data_dir,
        } => {
            let data_dir = data_dir.unwrap_or_else(default_data_dir);
            let mut kb = KnowledgeIndex::load(&data_dir, Arc::new(HashEmbedder))
                .map_err(CliError::failure)?;
            let ids: Vec<String> = match (corpus, file) {
                (Some(dir), _) => kb.ingest_corpus(&dir).map_err(CliError::failure)?.concat(),
                (None, Some(file)) => {
                    let (source, roles) = source
                        .zip(roles)
                        .expect("clap enforces --source and --roles");
                    kb.ingest(&read(&file)?, source.into(), &roles.0)
                        .map_err(CliError::failure)?
                }
                (None, None) => unreachable!("clap enforces --file or --corpus"),
            };
            kb.save(&data_dir).map_err(CliError::failure)?;
            print_json(&json!({ "chunk_ids": ids }));
            Ok(exit::OK)
        }
        Command::KbSearch {
            query,
            role,
            k,
            engine,
        } => {
            let kb = load_kb(&engine.data_dir(), &engine.corpora).map_err(CliError::failure)?;
            let hits = kb.search(&query, role, k).map_err(CliError::failure)?;
            let rows: Vec<_> = hits
                .iter()
                .map(|h| {
                    let chunk = kb.chunk(&h.chunk_id).expect("hits name indexed chunks");
                    json!({ "chunk_id": h.chunk_id, "score": h.score, "source_kind": chunk.source_kind, "text": chunk.text })
                })
                .collect();
            print_json(&json!(rows));
            Ok(exit::OK)
        }
        Command::Render { model, kind } => {
            let text = read(&model)?;
            let decode =
                |e: serde_json::Error| CliError::failure(format!("{}: {e}", model.display()));
            let (issues, rendered): (Vec<ModelIssue>, String) = match DiagramKind::from(kind) {
                DiagramKind::Class => {
                    let m: ClassModel = serde_json::from_str(&text).map_err(decode)?;
                    (check_class_model(&m), emit_class(&m))
                }
                DiagramKind::Sequence => {
                    let m: SequenceModel = serde_json::from_str(&text).map_err(decode)?;
                    (check_sequence_model(&m), emit_sequence(&m))
                }
                DiagramKind::Deployment => {
                    let m: DeploymentModel = serde_json::from_str(&text).map_err(decode)?;
                    (check_deployment_model(&m), emit_deployment(&m))
                }
            };
            if let Some(first) = issues.first() {
                return Err(CliError::failure(format!(
                    "invalid model: {}: {}",
                    first.path, first.message
                )));
            }
            let _ = writeln!(std::io::stdout(), "{rendered}");
            Ok(exit::OK)
        }
        Command::Replay { journal } => {
            let text = read(&journal)?;
            let state = replay(text.lines()).map_err(CliError::failure)?;
            let digest = package_digest(&state.package).map_err(CliError::failure)?;
            print_json(&json!({
                "session_id": state.session_id,
                "phase": state.phase,
                "round_count": state.round_count,
                "events": state.last_seq,
                "state_digest": state.digest(),
                "package_digest": digest,
            }));
            Ok(exit::OK)
        }
        Command::Serve {
            port,
            host,
            replay_dirs,
            engine,
        } => serve(&host, port, replay_dirs, &engine),
    }
}

fn ask_stdin(session: &Session) -> Result<Vec<(String, String)>, CliError> {
    let pending: Vec<_> = session
        .state()
        .package
        .pending_clarifications()
        .cloned()
        .collect();
    let stdin = std::io::stdin();
    let mut answers = Vec::new();
    for q in pending {
        eprint!("[{}] {}\n> ", q.question_id, q.question);
        std::io::stderr().flush().ok();
        let mut line = String::new();
        if stdin
            .lock()
            .read_line(&mut line)
            .map_err(CliError::failure)?
            == 0
        {
            return Err(CliError::failure(format!(
                "no answer for {} on stdin",
                q.question_id
            )));
        }
        answers.push((q.question_id, line.trim().to_string()));
    }
    Ok(answers)
}

pub fn run(
    srs: &Path,
    out: &Path,
    backend: &BackendSpec,
    config: SessionConfig,
    session_id: Option<String>,
    args: &EngineArgs,
) -> CliResult {
    let srs_text = read(srs)?;
    let kb = load_kb(&args.data_dir(), &args.corpora).map_err(CliError::failure)?;
    let backend = backend.build().map_err(CliError::failure)?;
    let engine = args
        .options()
        .engine(Arc::new(kb), backend, None)
        .map_err(CliError::failure)?;
    let id = session_id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    std::fs::create_dir_all(out).map_err(CliError::failure)?;
    let store = SessionStore::create(out, &id).map_err(CliError::failure)?;
    let journal = store.journal_path();
    let mut session = Session::start(&id, &srs_text, config, engine.clock.as_ref(), Some(store))
        .map_err(|e| CliError {
            code: exit::USAGE,
            message: e.to_string(),
        })?;
    loop {
        match session.run_to_completion(&engine) {
            Ok(_) => break,
            Err(OrchestratorError::AwaitingClarification(_)) => {
                for (q, a) in ask_stdin(&session)? {
                    session
                        .submit_clarification_answer(engine.clock.as_ref(), &q, &a)
                        .map_err(CliError::failure)?;
                }
            }
            // The abort is already journaled; report it like a budget abort.
            Err(e) if session.phase() == Phase::Aborted => {
                let _ = writeln!(std::io::stderr(), "maad: {e}");
                break;
            }
            Err(e) => return Err(CliError::failure(e)),
        }
    }
    let state = session.state();
    // An aborted package may be incomplete and then has no canonical form.
    let digest = match canonicalize(&state.package) {
        Ok(bytes) => {
            let digest = sha256_hex(&bytes);
            std::fs::write(out.join(PACKAGE_FILE), &bytes).map_err(CliError::failure)?;
            std::fs::write(out.join(DIGEST_FILE), format!("{digest}\n"))
                .map_err(CliError::failure)?;
            Some(digest)
        }
        Err(e) if state.phase == Phase::Aborted => {
            let _ = writeln!(std::io::stderr(), "maad: no package written: {e}");
            None
        }
        Err(e) => return Err(CliError::failure(e)),
    };
    print_json(&json!({
        "session_id": id,
        "phase": state.phase,
        "verdict": state.package.verdict,
        "round_count": state.round_count,
        "integrity_violations": validate_package(&state.package).len(),
        "package_digest": digest,
        "journal": journal,
    }));
    Ok(if state.phase == Phase::Confirmed {
        exit::OK
    } else {
        exit::ABORTED
    })
}

fn serve(host: &str, port: u16, replay_roots: Vec<PathBuf>, args: &EngineArgs) -> CliResult {
    let data_dir = args.data_dir();
    let kb = load_kb(&data_dir, &args.corpora).map_err(CliError::failure)?;
    let options = args.options();
    // Fail on bad templates or rules at startup rather than per session.
    options.runtime().map_err(CliError::failure)?;
    options.evaluator().map_err(CliError::failure)?;
    let config = ServerConfig {
        data_dir,
        replay_roots,
        engine: options,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::failure)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(CliError::failure)?;
        tracing::info!(addr = %listener.local_addr().map_err(CliError::failure)?, "listening");
        api::serve(AppState::new(config, kb), listener)
            .await
            .map_err(CliError::failure)
    })?;
    Ok(exit::OK)
}
