use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is numerically meaningless for the requested operation
    /// (e.g. an all-zero channel matrix fed to the beamformer design).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// Scenario configuration violates one of its documented invariants.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
