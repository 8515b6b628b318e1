use std::fmt;

use ruin_core::Error;

/// Failure of a subcommand; each variant maps to one process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Verification(String),
    Config(String),
    Assumption(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            CliError::Verification(_) => "verification",
            CliError::Config(_) => "config",
            CliError::Assumption(_) => "assumption",
            CliError::Numeric(_) => "numeric",
        }
    }

    fn detail(&self) -> &str {
        match self {
            CliError::Verification(s)
            | CliError::Config(s)
            | CliError::Assumption(s)
            | CliError::Numeric(s) => s,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Config(format!("cannot write {}: {e}", path.display()))
    }
}

/// `error: <exit code>: <category>: <detail>` on a single line.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = self.detail().replace('\n', " ");
        write!(
            f,
            "error: {}: {}: {}",
            self.exit_code(),
            self.label(),
            detail
        )
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            Error::Assumption { .. } => CliError::Assumption(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
