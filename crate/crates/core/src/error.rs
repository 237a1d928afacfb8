use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {n} exceeds dense limit {limit}; use relaxed domination")]
    DenseLimit { n: usize, limit: usize },

    #[error("backtracking exceeded {cap} reductions at iteration {iteration}")]
    BacktrackFailure { iteration: usize, cap: usize },

    #[error("sigma underflow ({sigma:e}) at iteration {iteration}")]
    SigmaUnderflow { iteration: usize, sigma: f64 },

    #[error("subproblem solver exceeded {cap} coordinate steps")]
    IterationCap { cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{algorithm}: {source}")]
    Algorithm {
        algorithm: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::InvalidInput(_) | Error::DimensionMismatch { .. } => 1,
            Error::Algorithm { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

/// Attaches `path` to an I/O error.
pub(crate) fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
