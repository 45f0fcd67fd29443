use std::fmt;

use kdsat_core::Error;
use serde_json::{json, Value};

use crate::args::Format;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    VerificationFailed = 2,
    BudgetExhausted = 3,
    InputError = 4,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    /// The more severe of two outcomes (input errors outrank everything).
    pub fn worst(self, other: Exit) -> Exit {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

/// A finished command: machine-readable result, human text and exit code.
#[derive(Debug)]
pub struct Outcome {
    pub exit: Exit,
    pub result: Value,
    pub text: String,
}

impl Outcome {
    pub fn new(exit: Exit, result: Value, text: String) -> Self {
        Outcome { exit, result, text }
    }
}

/// A command that could not produce a result.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            exit: Exit::InputError,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::BudgetExhausted { .. } | Error::CapExceeded { .. } | Error::Inconclusive(_) => Exit::BudgetExhausted,
            Error::InvalidParams(_)
            | Error::KTooSmall(_)
            | Error::Domain(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::IndexOutOfRange { .. }
            | Error::PlanRejected(_) => Exit::InputError,
            _ => Exit::VerificationFailed,
        };
        let message = match e {
            Error::KTooSmall(k) => format!("{e}; for k = {k} use `kdsat search-f2` or `kdsat mintree`"),
            _ => e.to_string(),
        };
        Failure { exit, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(format!("i/o error: {e}"))
    }
}

pub type CmdResult = Result<Outcome, Failure>;

/// Renders a command result on stdout (and errors on stderr in text mode).
pub fn render(format: Format, command: &str, config: Value, res: &CmdResult) -> String {
    match format {
        Format::Json => {
            let mut doc = json!({
                "schemaVersion": SCHEMA_VERSION,
                "command": command,
                "config": config,
            });
            match res {
                Ok(o) => {
                    doc["exitCode"] = json!(o.exit.code());
                    doc["result"] = o.result.clone();
                }
                Err(f) => {
                    doc["exitCode"] = json!(f.exit.code());
                    doc["error"] = json!(f.message);
                }
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => match res {
            Ok(o) => o.text.clone(),
            Err(_) => String::new(),
        },
    }
}
