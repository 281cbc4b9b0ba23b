use std::fmt;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use nearme_core::commitments::CommitmentError;
use serde::{Deserialize, Serialize};

/// An error with an HTTP status, a stable machine-readable code and a
/// human-readable message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_query(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_QUERY", message)
    }

    pub fn bad_body(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_BODY", message)
    }

    pub fn place_not_found(place: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "PLACE_NOT_FOUND", format!("no place matches `{}`", place.trim()))
    }

    pub fn origin_off_network(e: impl fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, "ORIGIN_OFF_NETWORK", e.to_string())
    }

    pub fn outside_coverage() -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "OUTSIDE_COVERAGE",
            "the drive-time area does not reach any county with data",
        )
    }

    pub fn no_snapshot() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "NO_SNAPSHOT", "data is not loaded yet")
    }

    pub fn upstream(code: &'static str, e: impl fmt::Display) -> Self {
        Self::new(StatusCode::BAD_GATEWAY, code, e.to_string())
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string())
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code.to_string(),
            message: self.message.clone(),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<CommitmentError> for ApiError {
    fn from(e: CommitmentError) -> Self {
        let (status, code) = match &e {
            CommitmentError::AllItemsFalse => (StatusCode::BAD_REQUEST, "ALL_ITEMS_FALSE"),
            CommitmentError::UnknownChannel(_) => (StatusCode::BAD_REQUEST, "UNKNOWN_CHANNEL"),
            CommitmentError::UnknownId(_) => (StatusCode::NOT_FOUND, "UNKNOWN_ID"),
            CommitmentError::StorageFailure(_) | CommitmentError::CorruptLog { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "STORAGE_FAILURE")
            }
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        (self.status, Json(self.body())).into_response()
    }
}
