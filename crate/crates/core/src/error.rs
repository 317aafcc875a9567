//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by group, measure, operator and spectral computations.
#[derive(Debug, Error)]
pub enum CoreError {
    /// An element was used with a group handle of a different model.
    #[error("model mismatch: element of kind `{element}` used with group `{group}`")]
    ModelMismatch { element: String, group: String },

    /// Two objects (measures, vectors) live on different groups.
    #[error("group mismatch: `{left}` vs `{right}`")]
    GroupMismatch { left: String, right: String },

    /// A finite Cayley table failed a group-law check, or a closure did not
    /// terminate under its cap.
    #[error("structural error: {0}")]
    Structural(String),

    /// A computation would exceed its configured memory/enumeration guard.
    #[error("resource guard exceeded while {what}: needed {needed}, budget {budget}")]
    Resource {
        what: String,
        needed: usize,
        budget: usize,
    },

    /// Method/model combination that is not implemented by design.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The rule engine derived contradictory verdicts (implementation bug signal).
    #[error("internal consistency violation: {0:?}")]
    Consistency(Vec<String>),

    /// Malformed user input (configs, word syntax, parameter domains).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
