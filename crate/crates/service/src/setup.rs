//! Wiring shared by the CLI and the HTTP server.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use maad_core::agent::{
    AgentRuntime, BackendError, CompletionBackend, RemoteBackend, ReplayBackend, TemplateSet,
};
use maad_core::evaluator::{Evaluator, RuleTable};
use maad_core::kb::{KbError, KnowledgeIndex};
use maad_core::orchestrator::{Clock, Engine, SystemClock};

pub const DATA_DIR_ENV: &str = "MAAD_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "maad-data";

/// `replay:<dir>[,<dir>...]` (earlier directories win) or `remote`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Replay(Vec<PathBuf>),
    Remote,
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "remote" {
            return Ok(BackendSpec::Remote);
        }
        let dirs = s
            .strip_prefix("replay:")
            .ok_or_else(|| format!("expected `replay:<dir>` or `remote`, got `{s}`"))?;
        let roots: Vec<PathBuf> = dirs
            .split(',')
            .filter(|d| !d.is_empty())
            .map(PathBuf::from)
            .collect();
        if roots.is_empty() {
            return Err("replay backend needs a directory".into());
        }
        Ok(BackendSpec::Replay(roots))
    }
}

impl BackendSpec {
    pub fn build(&self) -> Result<Arc<dyn CompletionBackend>, BackendError> {
        Ok(match self {
            BackendSpec::Replay(roots) => Arc::new(ReplayBackend::layered(roots.clone())),
            BackendSpec::Remote => Arc::new(RemoteBackend::from_env()?),
        })
    }
}

/// `MAAD_DATA_DIR`, else `./maad-data`.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

/// The persisted index under `data_dir`, plus any manifest corpora ingested
/// in memory on top.
pub fn load_kb(data_dir: &Path, corpora: &[PathBuf]) -> Result<KnowledgeIndex, KbError> {
    let mut kb = KnowledgeIndex::load(data_dir, Arc::new(maad_core::kb::HashEmbedder))?;
    for dir in corpora {
        kb.ingest_corpus(dir)?;
    }
    Ok(kb)
}

/// Optional overrides for templates and the evaluation rule table.
#[derive(Debug, Clone, Default)]
pub struct EngineOptions {
    pub templates_dir: Option<PathBuf>,
    pub rules_file: Option<PathBuf>,
}

impl EngineOptions {
    pub fn runtime(&self) -> Result<AgentRuntime, String> {
        let templates =
            TemplateSet::load(self.templates_dir.as_deref()).map_err(|e| e.to_string())?;
        Ok(AgentRuntime {
            templates,
            ..AgentRuntime::default()
        })
    }

    pub fn evaluator(&self) -> Result<Evaluator, String> {
        match &self.rules_file {
            Some(path) => Ok(Evaluator::new(
                RuleTable::load(path).map_err(|e| e.to_string())?,
            )),
            None => Ok(Evaluator::default()),
        }
    }

    pub fn engine(
        &self,
        kb: Arc<KnowledgeIndex>,
        backend: Arc<dyn CompletionBackend>,
        clock: Option<Arc<dyn Clock>>,
    ) -> Result<Engine, String> {
        Ok(Engine {
            runtime: self.runtime()?,
            kb,
            backend,
            evaluator: self.evaluator()?,
            clock: clock.unwrap_or_else(|| Arc::new(SystemClock)),
        })
    }
}
