use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] vlab_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} identities failed")]
    IdentitiesFailed { failed: usize, total: usize },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit code: 1 config/IO, 2 Bradlow bound, 3 numerical failure,
    /// 4 failed identities.
    pub fn exit_code(&self) -> i32 {
        use vlab_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(E::BradlowViolated { .. }) => 2,
            CliError::Core(E::NotConverged { .. } | E::LinearSolve(_)) => 3,
            CliError::Core(_) => 1,
            CliError::IdentitiesFailed { .. } => 4,
        }
    }
}
