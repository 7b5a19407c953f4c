use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed AER data at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("timestamp regression at event {index}: {previous} us -> {current} us")]
    Ordering { index: usize, previous: u64, current: u64 },

    #[error("cannot encode event {index}: field `{field}` = {value} is out of range")]
    Encode {
        index: usize,
        field: &'static str,
        value: u64,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("training dataset is empty")]
    EmptyDataset,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("source spike {0} is not a root of the decode path")]
    SourceNotInPath(String),

    #[error("encoder activity is missing or does not match the network")]
    MissingActivity,

    #[error("instance has an empty pixel set")]
    EmptyPixels,

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("buffer {index}: {source}")]
    Buffer {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn in_buffer(self, index: usize) -> Self {
        Error::Buffer {
            index,
            source: Box::new(self),
        }
    }

    pub fn path(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Path {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
