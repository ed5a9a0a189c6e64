//! Crate-wide error types.

use thiserror::Error;

/// Errors raised by parsers, graph construction, slicing, simulation,
/// scenario generation, and emission.
#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error in one of the text inputs (mini-C, OIL, facts file,
    /// property expression, scenario file, binding table, config).
    #[error("{file}:{line}: syntax error: {message}")]
    Syntax {
        file: String,
        line: u32,
        message: String,
    },

    /// Structurally valid input that violates a documented invariant
    /// (duplicate names, dangling event references, bad attribute values).
    #[error("validation error: {0}")]
    Validation(String),

    /// Fact set references entities that are never declared. Collects every
    /// dangling reference, not just the first.
    #[error("inconsistent fact set: {} dangling reference(s): {}", .0.len(), .0.join(", "))]
    Consistency(Vec<String>),

    #[error("unknown function: {0}")]
    UnknownFunction(String),

    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    #[error("unknown API: {0}")]
    UnknownApi(String),

    /// An API call names a task, resource, or event that the configuration
    /// does not declare.
    #[error("unknown object: {0}")]
    UnknownObject(String),

    /// `apply_api` was invoked on a state where the call's precondition does
    /// not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An end-level call names a function absent from the binding table.
    #[error("no binding for end-level function: {0}")]
    Binding(String),

    /// Root-level generation could not find any call passing the
    /// precondition checks within the resampling bound.
    #[error("scenario generation stuck after {0} consecutive rejected draws")]
    Stuck(u32),

    /// End-level generation found no admissible candidate within the
    /// resampling bound (possible with cyclic count constraints).
    #[error("end-level generation deadlocked after {0} consecutive rejected draws")]
    Deadlock(u32),

    /// Harness emission requires a non-empty end-level function set.
    #[error("slice has no end-level functions; nothing to emit")]
    EmptySlice,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn syntax(file: impl Into<String>, line: u32, message: impl Into<String>) -> Self {
        Error::Syntax {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
