use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{region} region too small: {population} agents need at least {required} cells, have {available}")]
    RegionCapacity {
        region: &'static str,
        population: usize,
        required: usize,
        available: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("replication failed (condition {condition}, replication {replication}, seed {seed}): {source}")]
    Replication {
        condition: usize,
        replication: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("design matrix is singular: column `{column}` {detail}")]
    Singular { column: String, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
