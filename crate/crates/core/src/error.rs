use std::path::PathBuf;

/// Errors raised while building or running a simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("invalid configuration:\n{0}")]
    Config(String),

    #[error("simulation diverged at step {step}: point {point} has a non-finite {quantity}")]
    NonFinite {
        step: u64,
        point: usize,
        quantity: &'static str,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("table cache {}: {reason}", path.display())]
    Cache { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
