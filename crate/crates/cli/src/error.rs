use std::io;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad command line or configuration.
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qsnn::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Core(_) | CliError::Io(_) => 2,
        }
    }
}
