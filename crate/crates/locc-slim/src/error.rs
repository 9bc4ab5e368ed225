use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] locc_core::Error),
    #[error("protocol failed validation with {} diagnostic(s)", .0.len())]
    Invalid(Vec<String>),
    #[error("{0}")]
    Usage(String),
}

/// Machine-readable error printed before a nonzero exit.
#[derive(Debug, Serialize)]
pub struct ErrorObject {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl CliError {
    /// 2 for numerical trouble, 1 for everything a user can fix in the input.
    pub fn exit_code(&self) -> i32 {
        use locc_core::Error as E;
        match self {
            CliError::Core(
                E::NumericalDegeneracy(_) | E::NoConvergence { .. } | E::ConvergenceFailure { .. },
            ) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Json(_) | CliError::Format(_) => "format",
            CliError::Core(_) if self.exit_code() == 2 => "numerical",
            CliError::Core(_) => "invalid-input",
            CliError::Invalid(_) => "validation",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn to_object(&self) -> ErrorObject {
        ErrorObject {
            status: "error",
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            diagnostics: match self {
                CliError::Invalid(d) => d.clone(),
                _ => Vec::new(),
            },
        }
    }
}
