use std::path::PathBuf;

use mgcpp_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Parse failure in named input files.
    #[error("{label}: {source}")]
    Input {
        label: String,
        #[source]
        source: CoreError,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot parse config {}: {message}", path.display())]
    ConfigSyntax { path: PathBuf, message: String },
    #[error("output directory {} is locked by another run (remove {} if stale)", dir.display(), dir.join(crate::output::LOCK_NAME).display())]
    Locked { dir: PathBuf },
    #[error("{asset}: {source}")]
    Asset {
        asset: String,
        #[source]
        source: CoreError,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 validation failure, 2 I/O or parse, 3 parameter error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::ConfigSyntax { .. } | CliError::Locked { .. } => 2,
            CliError::Config(_) => 3,
            CliError::Input { source, .. }
            | CliError::Asset { source, .. }
            | CliError::Core(source) => core_exit_code(source),
        }
    }
}

fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Io(_)
        | CoreError::MalformedRow { .. }
        | CoreError::Parse { .. }
        | CoreError::CrossedBook { .. }
        | CoreError::NonPositivePrice { .. }
        | CoreError::TimeNotMonotone { .. }
        | CoreError::Alignment { .. }
        | CoreError::Format(_)
        | CoreError::Json(_) => 2,
        CoreError::Parameter(_) | CoreError::Unstable(_) | CoreError::GridMismatch(_) => 3,
        CoreError::InsufficientData(_)
        | CoreError::NotErgodic(_)
        | CoreError::Consistency(_)
        | CoreError::Degenerate(_) => 1,
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 3);
        assert_eq!(CliError::Core(CoreError::Unstable(1.2)).exit_code(), 3);
        assert_eq!(
            CliError::Core(CoreError::Degenerate("x".into())).exit_code(),
            1
        );
        let missing = CliError::io(
            "a/b.csv",
            std::io::Error::from(std::io::ErrorKind::NotFound),
        );
        assert_eq!(missing.exit_code(), 2);
        assert!(missing.to_string().contains("a/b.csv"));
    }
}
