use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use interplay_core::Error;

/// An error answered as `{"error": {"kind", "message"}}` with a fitting status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, kind) = match e {
            Error::IllegalAction { .. } => (StatusCode::CONFLICT, "illegal_action"),
            Error::ConstraintViolation { .. } => (StatusCode::CONFLICT, "constraint_violation"),
            Error::External { .. } => (StatusCode::SERVICE_UNAVAILABLE, "external_policy"),
            Error::InvalidArgument(_) | Error::Dimension(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_argument"),
            Error::DegenerateAgent(_) => (StatusCode::UNPROCESSABLE_ENTITY, "degenerate_agent"),
            Error::NoFeasibleAction(_) => (StatusCode::UNPROCESSABLE_ENTITY, "no_feasible_action"),
            Error::EstimationFailure { .. } | Error::Policy { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "estimation_failure")
            }
        };
        Self::new(status, kind, message)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::malformed(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::malformed(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"kind": self.kind, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}
