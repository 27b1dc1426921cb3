use thiserror::Error;

/// Failure classes with distinct exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 1.
    #[error("{0}")]
    Config(String),
    /// Exit 2.
    #[error("{0}")]
    Infeasible(String),
    /// Exit 3.
    #[error("{0}")]
    Verification(String),
    /// Exit 1.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Infeasible(_) => 2,
            Self::Verification(_) => 3,
        }
    }
}

impl From<cohtrack::Error> for CliError {
    fn from(e: cohtrack::Error) -> Self {
        use cohtrack::Error as E;
        match e {
            E::NoControlPossible
            | E::PastBreakdown { .. }
            | E::Singular { .. }
            | E::ScheduleInfeasible { .. } => Self::Infeasible(e.to_string()),
            E::Csv { .. } => Self::Config(e.to_string()),
            other => Self::Config(other.to_string()),
        }
    }
}
