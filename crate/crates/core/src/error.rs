use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("non-finite {what}")]
    NonFinite { what: String },

    #[error("training aborted (seed {seed}, episode {episode}): {source}")]
    TrainingAborted {
        seed: u64,
        episode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Blahut-Arimoto did not converge after {iterations} iterations (last capacity {capacity})")]
    NotConverged {
        iterations: usize,
        capacity: f64,
        policy: Vec<f64>,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("unsupported file version in {path}: {found}")]
    UnsupportedVersion { path: PathBuf, found: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFinite { what: what.into() }
    }
}
