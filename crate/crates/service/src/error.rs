use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use evflow::config::Violation;
use serde::Serialize;

use crate::API_VERSION;

/// Error document: `{"api_version": 1, "error": {...}}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub violations: Vec<Violation>,
}

#[derive(Serialize)]
struct Body<'a> {
    api_version: u32,
    error: Detail<'a>,
}

#[derive(Serialize)]
struct Detail<'a> {
    kind: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "<[Violation]>::is_empty")]
    violations: &'a [Violation],
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }

    pub fn violations(violations: Vec<Violation>) -> Self {
        ApiError {
            message: format!("{} violation(s)", violations.len()),
            violations,
            ..Self::invalid("")
        }
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {kind} `{id}`"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "not_ready", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn from_core(e: evflow::Error) -> Self {
        match e {
            evflow::Error::Validation(msgs) => ApiError::violations(
                msgs.into_iter()
                    .map(|message| Violation {
                        file: None,
                        line: None,
                        message,
                    })
                    .collect(),
            ),
            evflow::Error::NotFound { kind, id } => ApiError::not_found(kind, &id),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            api_version: API_VERSION,
            error: Detail {
                kind: self.kind,
                message: &self.message,
                violations: &self.violations,
            },
        };
        (self.status, Json(body)).into_response()
    }
}
