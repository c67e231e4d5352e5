//! Error classes of the command-line front end and their exit codes.
//!
//! Exit codes separate three kinds of trouble: bad invocations (1),
//! numerical procedures that did not reach their tolerance (2), and exact
//! identities that came out false (3). The last class signals an
//! inconsistency in the mathematics or in the library, never a user error.

use thiserror::Error;

/// Failure of a command.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, values or configuration file.
    #[error("usage: {0}")]
    Usage(String),
    /// A solver or fit failed or missed its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An identity that must hold exactly came out false.
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    /// Writing the artifact failed, usually an unusable `--output` path.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Consistency(_) => 3,
        }
    }
}

/// Result alias for commands.
pub type CliResult<T> = Result<T, CliError>;

/// Wrap a library error as a numerical failure.
pub fn numerical<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Numerical(format!("{context}: {e}"))
}

/// Wrap a library error in an exact computation as a consistency failure.
pub fn exact<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Consistency(format!("{context}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), 1);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 2);
        assert_eq!(CliError::Consistency("x".into()).exit_code(), 3);
        let e = exact::<&str>("ctx")("broke");
        assert!(matches!(e, CliError::Consistency(ref s) if s == "ctx: broke"));
    }
}
