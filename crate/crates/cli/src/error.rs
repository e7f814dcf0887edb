use std::fmt;

/// A failed command. Usage errors exit with 2, everything else with 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Failed {
        code: &'static str,
        message: String,
    },
    /// Stdout was closed by the reader; the command stops quietly.
    Closed,
}

impl CliError {
    pub fn failed(code: &'static str, message: impl fmt::Display) -> CliError {
        CliError::Failed {
            code,
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> CliError {
        CliError::Usage(message.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed { .. } => 1,
            CliError::Closed => 0,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Failed { code, .. } => code,
            CliError::Closed => "closed",
        }
    }

    /// One-line JSON form written to stderr.
    pub fn line(&self) -> String {
        let message = match self {
            CliError::Usage(m) | CliError::Failed { message: m, .. } => m.as_str(),
            CliError::Closed => "output closed",
        };
        serde_json::json!({ "error": self.code(), "message": message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}
