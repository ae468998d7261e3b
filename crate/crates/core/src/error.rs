use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed annotation: {0}")]
    MalformedAnnotation(String),

    #[error("unknown class name '{0}'")]
    UnknownClass(String),

    #[error("invalid box ({xmin}, {ymin}, {xmax}, {ymax}): min corner exceeds max corner")]
    InvalidBox {
        xmin: i32,
        ymin: i32,
        xmax: i32,
        ymax: i32,
    },

    #[error("line {line}: malformed image-set record: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("image '{id}' is listed in the split but {} does not exist", path.display())]
    MissingAnnotation { id: String, path: PathBuf },

    #[error("annotation for image '{id}': {source}")]
    InAnnotation {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: malformed detection record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: score {score} outside [0, 1]")]
    ScoreOutOfRange { line: usize, score: f64 },

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("detection references unknown image '{0}'")]
    UnknownImage(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Line number attached to a dump or split-file error, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::MalformedLine { line, .. }
            | Error::MalformedRecord { line, .. }
            | Error::ScoreOutOfRange { line, .. }
            | Error::AtLine { line, .. } => Some(*line),
            _ => None,
        }
    }
}
