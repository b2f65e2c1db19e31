use std::path::PathBuf;

use dynbc_core::Error as CoreError;
use serde_json::json;
use thiserror::Error;

use crate::config::ConfigError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: CoreError,
    },
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn core(context: &'static str) -> impl FnOnce(CoreError) -> CliError {
        move |source| CliError::Core { context, source }
    }

    /// Parameter errors raised by the library count as config errors.
    pub fn is_config(&self) -> bool {
        match self {
            CliError::Config(_) => true,
            CliError::Core { source, .. } => matches!(
                source,
                CoreError::InvalidDomain(_) | CoreError::EmptySubboundary { .. } | CoreError::InvalidParameter { .. }
            ),
            CliError::Io { .. } => false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            EXIT_CONFIG
        } else {
            EXIT_NUMERICAL
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Core { .. } if self.is_config() => "config",
            CliError::Core { .. } => "numerical",
            CliError::Io { .. } => "io",
        };
        let field = match self {
            CliError::Config(e) => e.field().map(str::to_string),
            CliError::Core {
                source: CoreError::InvalidParameter { name, .. },
                ..
            } => Some(name.to_string()),
            _ => None,
        };
        json!({
            "error": {
                "kind": kind,
                "field": field,
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
