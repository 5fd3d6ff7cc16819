//! Dataset ingestion and preprocessing: IDX and CSV readers, PCA, binary
//! task sampling and synthetic blobs.

mod csv_io;
mod idx;
mod pca;
mod tasks;

pub use csv_io::{load_csv, CsvOptions};
pub use idx::{load_idx, read_idx, write_idx, write_idx_dataset, IdxArray};
pub use pca::{pca_project, Pca};
pub use tasks::{make_binary_task, synth_blobs, BlobSpec};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not enough examples: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
