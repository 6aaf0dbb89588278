use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration; `path` names the offending key (`""` for the root).
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Solver(#[from] scatter_core::Error),

    /// The invariant suite ran but some check failed.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Solver(_) | CliError::Validation(_) => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = match self {
            CliError::Schema { path, message } => json!({"kind": "schema", "path": path, "message": message}),
            CliError::Solver(e) => {
                let mut v = json!({"kind": e.kind(), "message": e.to_string()});
                if let scatter_core::Error::Convergence { history, .. } = e {
                    v["residual_history"] = json!(history);
                }
                v
            }
            CliError::Validation(m) => json!({"kind": "validation", "message": m}),
        };
        body["exit_code"] = json!(self.exit_code());
        json!({ "status": "error", "error": body })
    }
}
