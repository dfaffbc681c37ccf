//! Failure reporting: stable codes, exit statuses and the JSON error record.

use std::path::{Path, PathBuf};

use mpemba_core::ErrorKind;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_ASSUMPTION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mpemba_core::Error),
    #[error("{message}")]
    Config { code: &'static str, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} acceptance assertion(s) failed: {}", .0.len(), .0.join(", "))]
    AssertionsFailed(Vec<String>),
}

impl CliError {
    pub fn config(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Config {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn with_context(self, context: &str) -> Self {
        match self {
            CliError::Config { code, message } => CliError::Config {
                code,
                message: format!("{context}: {message}"),
            },
            other => other,
        }
    }

    pub fn code(&self) -> String {
        match self {
            CliError::Core(e) => e.code().to_string(),
            CliError::Config { code, .. } => format!("CONFIG_{code}"),
            CliError::Io { .. } => "IO_ERROR".into(),
            CliError::AssertionsFailed(_) => "ASSERTION_FAILED".into(),
        }
    }

    /// Output paths are user input, so I/O failures share the config status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Assumption => EXIT_ASSUMPTION,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Input => EXIT_CONFIG,
            },
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::AssertionsFailed(_) => EXIT_ASSERTION,
        }
    }

    fn category(&self) -> &'static str {
        match self.exit_code() {
            EXIT_ASSERTION => "assertion",
            EXIT_ASSUMPTION => "assumption",
            EXIT_NUMERICAL => "numerical",
            _ => "config",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "code": self.code(),
                "category": self.category(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let e = CliError::from(mpemba_core::Error::DegenerateSlowMode { gap: 0.0, tol: 1e-10 });
        assert_eq!(e.exit_code(), EXIT_ASSUMPTION);
        assert_eq!(e.code(), "DEGENERATE_SLOW_MODE");
        let e = CliError::from(mpemba_core::Error::NoConvergence { iterations: 30 });
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        let e = CliError::from(mpemba_core::Error::InvalidSpinCount(0));
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn json_record_has_stable_fields() {
        let v = CliError::config("UNKNOWN_KEY", "`x` is not a key").to_json();
        assert_eq!(v["error"]["code"], "CONFIG_UNKNOWN_KEY");
        assert_eq!(v["error"]["exit_code"], 4);
        assert_eq!(v["error"]["category"], "config");
    }
}
