use serde::Serialize;
use serde_json::Value;

/// Error envelope shared by the HTTP API and the CLI:
/// `{"error": {"code", "message", "location"?, "details"?}}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<ErrorLocation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorLocation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub error: &'a ApiError,
}

pub type ApiResult<T> = Result<T, ApiError>;

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            location: None,
            details: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(400, "invalid-argument", message)
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        ApiError::new(404, "unknown-reference", format!("unknown {} `{}`", kind, id))
    }

    pub fn concurrent_writer() -> Self {
        ApiError::new(409, "concurrent-writer", "another evolution is being applied")
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }

    pub fn envelope(&self) -> Envelope<'_> {
        Envelope { error: self }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<xdw::Error> for ApiError {
    fn from(e: xdw::Error) -> Self {
        let status = match &e {
            xdw::Error::Parse { .. } | xdw::Error::Invalid(_) => 400,
            xdw::Error::Unknown { .. } => 404,
            xdw::Error::Io { .. } => 500,
            _ => 422,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        err.location = e.location().map(|l| ErrorLocation {
            file: l.file.clone(),
            line: l.line,
            column: l.column,
        });
        err
    }
}
