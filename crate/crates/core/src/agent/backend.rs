//! Completion backends: a remote HTTP endpoint, a replay directory of canned
//! outputs, and an adversarial backend for termination testing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Prompt, TaskKey};
use crate::Role;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no replay file for {0}")]
    MissingReplay(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

/// A source of raw completions. Must be callable from several sessions at once.
pub trait CompletionBackend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(
        &self,
        key: &TaskKey,
        prompt: &Prompt,
        params: &CompletionParams,
    ) -> Result<String, BackendError>;
}

/// Serves `<role>_<round>_<task>.txt` from the first root that has it.
/// Repair attempt `n` prefers `<role>_<round>_<task>.repair<n>.txt`.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    roots: Vec<PathBuf>,
}

impl ReplayBackend {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ReplayBackend {
            roots: vec![root.into()],
        }
    }

    /// Roots are searched in order; put overlays first.
    pub fn layered(roots: Vec<PathBuf>) -> Self {
        ReplayBackend { roots }
    }

    pub fn roots(&self) -> &[PathBuf] {
        &self.roots
    }

    fn find(&self, name: &str) -> Option<PathBuf> {
        self.roots
            .iter()
            .map(|r| r.join(name))
            .find(|p| p.is_file())
    }
}

impl CompletionBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(
        &self,
        key: &TaskKey,
        _prompt: &Prompt,
        _params: &CompletionParams,
    ) -> Result<String, BackendError> {
        let stem = key.file_stem();
        let mut candidates = Vec::new();
        if key.attempt > 0 {
            candidates.push(format!("{stem}.repair{}.txt", key.attempt));
        }
        candidates.push(format!("{stem}.txt"));
        let path = candidates
            .iter()
            .find_map(|c| self.find(c))
            .ok_or_else(|| BackendError::MissingReplay(format!("{stem}.txt")))?;
        std::fs::read_to_string(&path)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    model: &'a str,
    system: &'a str,
    user: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct RemoteResponse {
    text: String,
}

/// Single-endpoint HTTP backend: POST `{model, system, user, temperature,
/// max_tokens}`, response `{text}`.
pub struct RemoteBackend {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish()
    }
}

pub const DEFAULT_REMOTE_MODEL: &str = "default";

impl RemoteBackend {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(true)
            .build()
            .into();
        RemoteBackend {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            agent,
        }
    }

    /// Reads `MAAD_LLM_ENDPOINT`, `MAAD_LLM_API_KEY` and optionally
    /// `MAAD_LLM_MODEL`.
    pub fn from_env() -> Result<Self, BackendError> {
        let endpoint = std::env::var("MAAD_LLM_ENDPOINT")
            .map_err(|_| BackendError::Unavailable("MAAD_LLM_ENDPOINT is not set".into()))?;
        let api_key = std::env::var("MAAD_LLM_API_KEY").ok();
        let model =
            std::env::var("MAAD_LLM_MODEL").unwrap_or_else(|_| DEFAULT_REMOTE_MODEL.to_string());
        Ok(RemoteBackend::new(endpoint, api_key, model))
    }
}

impl CompletionBackend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(
        &self,
        _key: &TaskKey,
        prompt: &Prompt,
        params: &CompletionParams,
    ) -> Result<String, BackendError> {
        let body = RemoteRequest {
            model: &self.model,
            system: &prompt.system,
            user: &prompt.user,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let parsed: RemoteResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Unavailable(format!("malformed response: {e}")))?;
        Ok(parsed.text)
    }
}

/// Fixed outputs for the producing roles plus a scripted stream of evaluator
/// replies, one per round. Rounds past the end of the script repeat its last
/// entry; an empty script confirms.
#[derive(Debug, Clone, Default)]
pub struct AdversarialBackend {
    fixed: BTreeMap<Role, String>,
    evaluator_rounds: Vec<String>,
}

impl AdversarialBackend {
    pub fn new(fixed: BTreeMap<Role, String>, evaluator_rounds: Vec<String>) -> Self {
        AdversarialBackend {
            fixed,
            evaluator_rounds,
        }
    }

    /// Takes producing-role outputs from replay files, e.g.
    /// `[(Analyst, "analyst_1_initial.txt")]`.
    pub fn from_files(
        dir: &Path,
        files: &[(Role, &str)],
        evaluator_rounds: Vec<String>,
    ) -> std::io::Result<Self> {
        let mut fixed = BTreeMap::new();
        for (role, file) in files {
            fixed.insert(*role, std::fs::read_to_string(dir.join(file))?);
        }
        Ok(AdversarialBackend::new(fixed, evaluator_rounds))
    }
}

impl CompletionBackend for AdversarialBackend {
    fn name(&self) -> &str {
        "adversarial"
    }

    fn complete(
        &self,
        key: &TaskKey,
        _prompt: &Prompt,
        _params: &CompletionParams,
    ) -> Result<String, BackendError> {
        if key.role == Role::Evaluator {
            let index = (key.round as usize).saturating_sub(1);
            let reply = self
                .evaluator_rounds
                .get(index)
                .or(self.evaluator_rounds.last())
                .cloned()
                .unwrap_or_else(|| {
                    "```json\n{\"mismatches\": [], \"citations\": []}\n```".to_string()
                });
            return Ok(reply);
        }
        self.fixed
            .get(&key.role)
            .cloned()
            .ok_or_else(|| BackendError::MissingReplay(key.file_stem()))
    }
}
