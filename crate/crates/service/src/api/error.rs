use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use maad_core::agent::AgentError;
use maad_core::kb::KbError;
use maad_core::orchestrator::OrchestratorError;

/// Error body shared by every endpoint: `{error_code, message, details?}`.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error_code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            error_code: code.to_string(),
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn unknown_session(id: &str) -> Self {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownSession",
            format!("no session `{id}`"),
        )
    }

    pub fn invalid_state(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, "InvalidState", message)
    }

    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        use OrchestratorError as E;
        let message = e.to_string();
        match e {
            E::EmptySrs => ApiError::validation("EmptySrs", message),
            E::InvalidConfig(_) => ApiError::validation("InvalidConfig", message),
            E::EmptyAnswer => ApiError::validation("EmptyAnswer", message),
            E::UnknownQuestion(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "UnknownQuestion", message)
            }
            E::AlreadyAnswered(_) => {
                ApiError::new(StatusCode::CONFLICT, "AlreadyAnswered", message)
            }
            E::TerminalState(_) | E::InvalidState { .. } => ApiError::invalid_state(message),
            E::AwaitingClarification(ids) => {
                ApiError::new(StatusCode::CONFLICT, "AwaitingClarification", message)
                    .with_details(serde_json::json!({ "question_ids": ids }))
            }
            E::Agent(AgentError::BackendUnavailable { .. }) => ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "BackendUnavailable",
                message,
            ),
            E::Agent(_) => ApiError::validation("AgentFailed", message),
            E::Evaluation(_) => ApiError::validation("EvaluationFailed", message),
            E::EmptyJournal | E::CorruptJournal(_) | E::Io(_) => ApiError::internal(message),
        }
    }
}

impl From<KbError> for ApiError {
    fn from(e: KbError) -> Self {
        let message = e.to_string();
        match e {
            KbError::EmptyDocument => ApiError::validation("EmptyDocument", message),
            KbError::NoRoleTags => ApiError::validation("NoRoleTags", message),
            KbError::EmptyText => ApiError::validation("EmptyText", message),
            KbError::InvalidK => ApiError::validation("InvalidK", message),
            KbError::IndexUnavailable(_) => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "IndexUnavailable", message)
            }
            KbError::Io(_) => ApiError::internal(message),
        }
    }
}
