//! Experiment harness around `rakeness-core`.
//!
//! The library side of the `rakeness` binary: configuration parsing, design
//! artifact management, the Monte-Carlo experiment engine, result
//! summarization, and plotting. Everything here is deterministic in the
//! master seed — reruns produce byte-identical CSV output regardless of the
//! worker count.
//!
//! Process exit codes, used by every subcommand:
//!
//! * `0` — success;
//! * `2` — configuration or usage error (bad file, bad key, bad value);
//! * `3` — infeasible request (a budget below the achievable floor, or
//!   missing design artifacts that a run needs);
//! * `4` — numeric or I/O failure while executing an otherwise valid request.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod stats;
pub mod svg;

use rakeness_core::Error;

/// Terminal classification of a command's failure, carrying the message the
/// binary prints and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 4, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::InvalidInput(_) | Error::Shape(_) | Error::Domain(_) => 2,
            Error::Infeasible { .. } => 3,
            Error::Numeric(_) | Error::Io(_) | Error::Placement(_) => 4,
        };
        Failure { code, message: err.to_string() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}
