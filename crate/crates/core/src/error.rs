use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: class id {class_id} out of range for {num_classes} classes")]
    ClassOutOfRange {
        line: usize,
        class_id: u64,
        num_classes: u32,
    },

    #[error("line {line}: duplicate image id {id:?}")]
    DuplicateImage { line: usize, id: String },

    #[error("line {line}: non-finite score in record {id:?}")]
    NonFiniteScore { line: usize, id: String },

    #[error("line {line}: class {class_id} appears twice in record {id:?}")]
    DuplicateClass { line: usize, id: String, class_id: u32 },

    #[error("line {line}: record {id:?} has {len} entries, allowed 1..={depth}")]
    DepthViolation {
        line: usize,
        id: String,
        len: usize,
        depth: u32,
    },

    #[error("image {image_id:?} needs top-{required} but only {available} ranked entries are stored; regenerate predictions with a larger depth")]
    InsufficientDepth {
        image_id: String,
        required: usize,
        available: usize,
    },

    #[error("empty evaluation population for {metric}")]
    EmptyPopulation { metric: &'static str },

    #[error("population mismatch under strict policy: {only_left} ids only in {left}, {only_right} only in {right}")]
    PopulationMismatch {
        left: &'static str,
        right: &'static str,
        only_left: usize,
        only_right: usize,
    },

    #[error("dataset id mismatch: predictions {predictions:?} vs annotations {annotations:?}")]
    DatasetMismatch {
        predictions: String,
        annotations: String,
    },

    #[error("class space mismatch: {left} vs {right} classes")]
    ClassCountMismatch { left: u32, right: u32 },

    #[error("no non-empty label-count groups in range")]
    NoGroupsInRange,

    #[error("single-label ground truth for {id:?} has {count} labels, expected exactly 1")]
    NotSingleLabel { id: String, count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("patch manifest row {row}: {message}")]
    BadPatch { row: usize, message: String },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("binary container: {0}")]
    Container(String),

    #[error("missing metric {metric} for model {model_id:?}")]
    MissingMetric { model_id: String, metric: String },

    #[error("no common models between report sets")]
    EmptyIntersection,

    #[error("heterogeneous reports for {model_id:?}: {message}")]
    Heterogeneous { model_id: String, message: String },

    #[error("nothing to render: {0}")]
    EmptyTable(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }
}
