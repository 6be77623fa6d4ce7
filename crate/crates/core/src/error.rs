use thiserror::Error;

use crate::query::QueryError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments, malformed queries, arity problems.
    Validation,
    /// Key family or curve mismatches, malformed cryptographic records.
    Crypto,
    /// Storage or filesystem failures.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("key family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("curve mismatch: record uses curve id {found}, expected {expected}")]
    CurveMismatch { expected: u8, found: u8 },

    #[error("unexpected record kind: expected {expected}, found {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("duplicate row id {0}")]
    DuplicateRowId(u64),

    #[error(transparent)]
    Query(#[from] QueryError),

    #[error("storage failure: {0}")]
    Storage(#[from] rusqlite::Error),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_)
            | Error::LengthMismatch { .. }
            | Error::DuplicateRowId(_)
            | Error::Query(_) => ErrorClass::Validation,
            Error::FamilyMismatch(_)
            | Error::CurveMismatch { .. }
            | Error::WrongKind { .. }
            | Error::UnsupportedVersion(_)
            | Error::Malformed(_) => ErrorClass::Crypto,
            Error::Storage(_) | Error::Io(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn ensure_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}
