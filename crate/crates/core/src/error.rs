use std::path::PathBuf;

use thiserror::Error;

use crate::skelgraph::PathResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("degenerate extent: all points coincide")]
    DegenerateExtent,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("reference to missing node id {0}")]
    MissingReference(i64),

    #[error("duplicate node id {0}")]
    DuplicateId(i64),

    #[error("search budget of {budget} node visits exceeded (best-so-far length {:.6})", best.length)]
    BudgetExceeded { budget: u64, best: Box<PathResult> },

    #[error("degenerate training input: {0}")]
    Degenerate(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),
}

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Input,
    Numeric,
    Budget,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Input => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Budget => 5,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ErrorClass::Config => "CONFIG",
            ErrorClass::Input => "INPUT",
            ErrorClass::Numeric => "NUMERIC",
            ErrorClass::Budget => "BUDGET",
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Parameter(_) => ErrorClass::Config,
            Error::NonFinite(_) | Error::Degenerate(_) => ErrorClass::Numeric,
            Error::BudgetExceeded { .. } => ErrorClass::Budget,
            _ => ErrorClass::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
