use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("config has no `{0}` block")]
    MissingBlock(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Library(#[from] wvalab::Error),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::MissingBlock(_) => "missing_block",
            CliError::Config(_) => "config",
            CliError::Library(_) => "computation",
            CliError::CheckFailed(_) => "check_failed",
        }
    }

    /// A failed check exits with 1; every other error with 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Parse { line, column, .. } = self {
            body["line"] = json!(line);
            body["column"] = json!(column);
        }
        json!({ "error": body })
    }
}
