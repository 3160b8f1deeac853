use std::fmt;
use std::io;
use std::path::Path;

use serde_json::{json, Value};
use smithwilson::marketio::IngestError;
use smithwilson::{CurveError, FitError, ValidationError};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// A run failure, reported as one JSON line on stderr.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub detail: Value,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: "validation",
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        Self {
            kind: "io",
            message: format!("{}: {err}", path.display()),
            detail: json!({ "path": path.display().to_string() }),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "solver" | "curve" => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn to_json_line(&self) -> String {
        let mut v = json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.exit_code(),
        });
        if let Value::Object(extra) = &self.detail {
            for (k, x) in extra {
                v[k] = x.clone();
            }
        }
        v.to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<ValidationError> for Failure {
    fn from(e: ValidationError) -> Self {
        Self {
            kind: "validation",
            message: e.to_string(),
            detail: json!({ "field": e.field }),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Self {
            kind: "validation",
            message: e.message.clone(),
            detail: json!({ "source": e.source, "line": e.line, "column": e.column }),
        }
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        let kind = if e.is_solver_failure() { "solver" } else { "validation" };
        let detail = match &e {
            FitError::RedundantExact { ids } => json!({ "instruments": ids }),
            _ => Value::Null,
        };
        Self {
            kind,
            message: e.to_string(),
            detail,
        }
    }
}

impl From<CurveError> for Failure {
    fn from(e: CurveError) -> Self {
        let detail = match &e {
            CurveError::NonPositivePrice { term, .. } | CurveError::Domain { term, .. } => json!({ "term": term }),
            CurveError::Unsupported(_) => Value::Null,
        };
        Self {
            kind: "curve",
            message: e.to_string(),
            detail,
        }
    }
}
