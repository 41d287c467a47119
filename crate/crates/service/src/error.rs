use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use dsrank_core::StoreError;
use serde_json::{json, Value};

/// Problem document returned for every non-2xx response.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Vec<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), details: Vec::new() }
    }

    pub fn with_details(mut self, details: Vec<Value>) -> Self {
        self.details = details;
        self
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or invalid bearer token")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::UnknownSession(_) => Self::not_found("unknown_session", message),
            StoreError::RevisionConflict { expected, current } => {
                Self::new(StatusCode::CONFLICT, "revision_conflict", message)
                    .with_details(vec![json!({ "expected": expected, "current": current })])
            }
            StoreError::WrongState { state, kind } => Self::new(StatusCode::CONFLICT, "wrong_state", message)
                .with_details(vec![json!({ "state": state, "kind": kind })]),
            StoreError::IllegalTransition { from, to } => {
                Self::new(StatusCode::CONFLICT, "illegal_transition", message)
                    .with_details(vec![json!({ "from": from, "to": to })])
            }
            StoreError::IncompleteSubmissions { artifact, missing } => {
                Self::new(StatusCode::CONFLICT, "incomplete_submissions", message).with_details(
                    missing.iter().map(|a| json!({ "artifact": artifact, "analyst_id": a })).collect(),
                )
            }
            StoreError::Validation(violations) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", message)
                    .with_details(violations.iter().map(|v| serde_json::to_value(v).unwrap_or(Value::Null)).collect())
            }
            StoreError::Engine(e) => {
                let code = if e.is_degenerate() { "degenerate_input" } else { "invalid_input" };
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
            }
            StoreError::Storage(_) => {
                tracing::error!(%message, "store failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", message)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "details": self.details });
        (self.status, Json(body)).into_response()
    }
}
