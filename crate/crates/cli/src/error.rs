use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    ConfigInvalid,
    SolverFailure,
    Io,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[error("{kind:?}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// Grid point at which a solver failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_point: Option<Value>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::ConfigInvalid, message: message.into(), grid_point: None }
    }

    pub fn solver(err: cqed_core::Error, grid_point: Value) -> Self {
        Self { kind: ErrorKind::SolverFailure, message: err.to_string(), grid_point: Some(grid_point) }
    }

    pub fn io(err: std::io::Error, path: &std::path::Path) -> Self {
        Self { kind: ErrorKind::Io, message: format!("{}: {err}", path.display()), grid_point: None }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::ConfigInvalid => 2,
            ErrorKind::SolverFailure => 3,
            ErrorKind::Io => 1,
        }
    }

    /// One-line JSON report.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
            "grid_point": self.grid_point,
        })
        .to_string()
    }
}
