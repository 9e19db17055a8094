use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("near-singular evaluation: distance {distance:.3e} m below guard {guard:.3e} m")]
    NearSingular { distance: f64, guard: f64 },

    #[error("series did not converge: {0}")]
    NonConvergent(String),

    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Geometry(_) | Error::Parse { .. } | Error::Data(_) | Error::Io { .. } => 3,
            Error::NearSingular { .. }
            | Error::NonConvergent(_)
            | Error::IllConditioned(_)
            | Error::Numerical { .. } => 4,
        }
    }
}
