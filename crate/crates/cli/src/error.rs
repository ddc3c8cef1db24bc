use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Error reported as a single JSON object on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl CliError {
    pub fn config(field: Option<String>, message: impl Into<String>) -> Self {
        Self {
            kind: "config",
            message: message.into(),
            field,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: "io",
            message: format!("{}: {err}", path.display()),
            field: None,
        }
    }

    pub fn check_failed(message: impl Into<String>) -> Self {
        Self {
            kind: "check_failed",
            message: message.into(),
            field: None,
        }
    }

    pub fn internal(err: impl fmt::Display) -> Self {
        Self {
            kind: "internal",
            message: err.to_string(),
            field: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<cayley_core::Error> for CliError {
    fn from(err: cayley_core::Error) -> Self {
        use cayley_core::Error as E;
        let message = err.to_string();
        match err {
            E::InvalidParameter { field, .. } => CliError::config(Some(field.to_string()), message),
            E::MatrixMarket { .. } | E::Csv(_) | E::InvalidGraph(_) | E::LengthMismatch { .. } => Self {
                kind: "input",
                message,
                field: None,
            },
            E::Io(_) => Self {
                kind: "io",
                message,
                field: None,
            },
            _ => Self {
                kind: "compute",
                message,
                field: None,
            },
        }
    }
}
