use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("UsageError: {0}")]
    Clap(clap::Error),

    #[error("UsageError: {0}")]
    Usage(String),

    #[error("InputError: {0}")]
    Input(String),

    #[error(transparent)]
    Module(#[from] lll_phase::Error),

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 for `--help`/`--version`, 2 usage, 3 bad input file, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Module(_) | CliError::Io(_) => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Clap(_) | CliError::Usage(_) => "UsageError",
            CliError::Input(_) => "InputError",
            CliError::Module(e) => e.name(),
            CliError::Io(_) => "IoError",
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self { CliError::Io(std::io::Error::other(e)) }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self { CliError::Io(std::io::Error::other(e)) }
}
