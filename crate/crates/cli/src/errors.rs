use std::process::ExitCode;

/// CLI failures, classified for the exit code contract: 2 bad config,
/// 3 bad dataset, 4 internal numeric/runtime failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Dataset { line: Option<usize>, message: String },
    Internal(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn dataset(line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Dataset { line, message: msg.into() }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Dataset { .. } => ExitCode::from(3),
            CliError::Internal(_) => ExitCode::from(4),
        }
    }

    /// One-line machine-readable error record for stderr.
    pub fn to_json(&self) -> String {
        let (kind, message, line) = match self {
            CliError::Config(m) => ("config", m, None),
            CliError::Dataset { line, message } => ("dataset", message, *line),
            CliError::Internal(m) => ("numeric", m, None),
        };
        let mut out = format!(
            "{{\"error\":{},\"kind\":\"{}\"",
            serde_json::to_string(message).unwrap_or_else(|_| "\"?\"".into()),
            kind
        );
        if let Some(l) = line {
            out.push_str(&format!(",\"line\":{l}"));
        }
        out.push('}');
        out
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "bad config: {m}"),
            CliError::Dataset { line: Some(l), message } => {
                write!(f, "bad dataset (line {l}): {message}")
            }
            CliError::Dataset { line: None, message } => write!(f, "bad dataset: {message}"),
            CliError::Internal(m) => write!(f, "internal failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
