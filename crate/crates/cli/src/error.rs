use std::path::Path;

use thiserror::Error;

/// Failure of one CLI invocation, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Domain(_) => "domain",
            CliError::Internal(_) => "internal",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }

    pub(crate) fn read(path: &Path, e: std::io::Error) -> Self {
        // A referenced input that is not there is a configuration mistake.
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Config(format!("input file {} does not exist", path.display()))
        } else {
            CliError::Io(format!("reading {}: {e}", path.display()))
        }
    }

    pub(crate) fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("writing {}: {e}", path.display()))
    }
}

impl From<fracvisc::Error> for CliError {
    fn from(e: fracvisc::Error) -> Self {
        use fracvisc::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::Grid(_) | E::Dimension { .. } | E::Parse { .. } | E::Order { .. } | E::Empty(_) => {
                CliError::Config(msg)
            }
            E::Domain(_) | E::DegenerateExponent(_) | E::ZeroOutput(_) => CliError::Domain(msg),
            E::Io(_) => CliError::Io(msg),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
