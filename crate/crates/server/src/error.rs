use std::fmt;

use arena_core::runner::ReplayError;
use arena_core::vgdl::{Diagnostic, DiagnosticKind, LayoutError};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// One editor-facing diagnostic. `line` and `col` are 1-based within `file`; 0 means the
/// problem has no single location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticView {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl From<&Diagnostic> for DiagnosticView {
    fn from(d: &Diagnostic) -> Self {
        let (line, col) = match &d.kind {
            DiagnosticKind::Layout(LayoutError::Empty | LayoutError::NoAvatar) => (0, 0),
            DiagnosticKind::Layout(LayoutError::RaggedGrid { .. }) => (d.row + 1, 0),
            DiagnosticKind::Layout(_) => (d.row + 1, d.col + 1),
            _ => (d.row, 0),
        };
        DiagnosticView {
            file: d
                .level
                .map_or("game.vgdl".to_string(), |l| format!("level_{l}.txt")),
            line,
            col,
            message: d.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApiError {
    UnknownBundle(String),
    UnknownSession(String),
    UnknownReplay(String),
    Parse(Vec<DiagnosticView>),
    BadRequest(String),
    SessionFinished,
    StepOutOfRange { index: usize, len: usize },
    CorruptTrace(String),
    Internal(String),
}

/// JSON error body: `{"error": code, "message": text}` plus `diagnostics` for parse errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticView>,
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownBundle(_) => "unknown_bundle",
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::UnknownReplay(_) => "unknown_replay",
            ApiError::Parse(_) => "parse_error",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::SessionFinished => "session_finished",
            ApiError::StepOutOfRange { .. } => "step_out_of_range",
            ApiError::CorruptTrace(_) => "corrupt_trace",
            ApiError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownBundle(_)
            | ApiError::UnknownSession(_)
            | ApiError::UnknownReplay(_)
            | ApiError::StepOutOfRange { .. } => StatusCode::NOT_FOUND,
            ApiError::Parse(_) | ApiError::CorruptTrace(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::SessionFinished => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
            diagnostics: match self {
                ApiError::Parse(d) => d.clone(),
                _ => Vec::new(),
            },
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApiError::UnknownBundle(b) => write!(f, "no bundle named `{b}`"),
            ApiError::UnknownSession(s) => write!(f, "no live session `{s}`"),
            ApiError::UnknownReplay(r) => write!(f, "no replay `{r}`"),
            ApiError::Parse(d) => match d.first() {
                Some(d) => write!(f, "{}:{}: {}", d.file, d.line, d.message),
                None => write!(f, "invalid game text"),
            },
            ApiError::BadRequest(m) => write!(f, "{m}"),
            ApiError::SessionFinished => write!(f, "session step budget exhausted"),
            ApiError::StepOutOfRange { index, len } => {
                write!(f, "step {index} out of range (trace has {len} steps)")
            }
            ApiError::CorruptTrace(m) => write!(f, "corrupt trace: {m}"),
            ApiError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ApiError {}

impl From<ReplayError> for ApiError {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::StepOutOfRange { index, len } => ApiError::StepOutOfRange { index, len },
            other => ApiError::CorruptTrace(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}
