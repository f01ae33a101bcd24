use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum GnfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("singular linear system at nonlinear iteration {iteration}")]
    SingularSystem { iteration: usize },

    #[error("study aborted: {0}")]
    StudyAborted(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GnfError>;
