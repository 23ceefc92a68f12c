use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Compute(#[from] traceform::Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    /// 1 for anything the caller can fix in the invocation or inputs, 2 when
    /// the problem was well posed but the solve did not converge (or a
    /// diagnostic check failed).
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::ChecksFailed { .. } => 2,
            CliError::Compute(e) => match e {
                traceform::Error::Infeasible { .. }
                | traceform::Error::MaxIterations { .. }
                | traceform::Error::SingularCurvature
                | traceform::Error::EighNoConvergence { .. }
                | traceform::Error::NoSignChange { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
